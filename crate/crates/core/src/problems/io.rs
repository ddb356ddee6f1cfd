//! Text instance format.
//!
//! ```text
//! DIMS n m
//! ROWS
//! <GE|LE|EQ> <nnz> <col> <value> ...     one line per row
//! RHS
//! b_1 ... b_m
//! MAT M <nnz>
//! <row> <col> <value>                    nnz lines
//! VEC q
//! q_1 ... q_n
//! BOUNDS
//! <l_j> <u_j>                            n lines, inf / -inf allowed
//! END
//! ```
//!
//! Indices are zero-based. Values are written with 17 significant digits
//! so a write followed by a read reproduces the data bit for bit. Blank
//! lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::SparseMatrix;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_avi(p: &AviProblem) -> String {
    let mut s = String::new();
    let (n, m) = (p.n(), p.m());
    let _ = writeln!(s, "DIMS {n} {m}");
    s.push_str("ROWS\n");
    let at = p.a.transpose();
    for i in 0..m {
        let entries: Vec<(usize, f64)> = at.col(i).collect();
        let _ = write!(s, "{} {}", p.kinds[i].token(), entries.len());
        for (j, v) in entries {
            let _ = write!(s, " {j} {}", num(v));
        }
        s.push('\n');
    }
    s.push_str("RHS\n");
    s.push_str(&p.b.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" "));
    s.push('\n');
    let trip: Vec<(usize, usize, f64)> = p.m_mat.triplets().collect();
    let _ = writeln!(s, "MAT M {}", trip.len());
    for (i, j, v) in trip {
        let _ = writeln!(s, "{i} {j} {}", num(v));
    }
    s.push_str("VEC q\n");
    s.push_str(&p.q.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" "));
    s.push('\n');
    s.push_str("BOUNDS\n");
    for j in 0..n {
        let _ = writeln!(s, "{} {}", num(p.l[j]), num(p.u[j]));
    }
    s.push_str("END\n");
    s
}

pub fn write_avi(p: &AviProblem, path: &Path) -> Result<()> {
    std::fs::write(path, format_avi(p))?;
    Ok(())
}

pub fn read_avi(path: &Path) -> Result<AviProblem> {
    parse_avi(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i, l.split_whitespace().collect()))
            .collect();
        let last = text.lines().count().max(1);
        Self { inner, pos: 0, last }
    }

    fn err<T>(&self, line: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line, msg: msg.into() })
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.get(self.pos) {
            Some(l) => {
                self.pos += 1;
                Ok(l.clone())
            }
            None => self.err(self.last, format!("unexpected end of file, expected {what}")),
        }
    }

    fn header(&mut self, words: &[&str]) -> Result<(usize, Vec<&'a str>)> {
        let (line, toks) = self.next(words[0])?;
        if toks.len() < words.len() || toks[..words.len()] != *words {
            return self.err(line, format!("expected {:?}, found {:?}", words.join(" "), toks.join(" ")));
        }
        Ok((line, toks[words.len()..].to_vec()))
    }
}

fn parse<T: FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

fn count(line: usize, toks: &[&str], expected: usize, what: &str) -> Result<()> {
    if toks.len() != expected {
        return Err(Error::Parse {
            line,
            msg: format!("{what}: expected {expected} values, found {}", toks.len()),
        });
    }
    Ok(())
}

pub fn parse_avi(text: &str) -> Result<AviProblem> {
    let mut ls = Lines::new(text);
    let (line, rest) = ls.header(&["DIMS"])?;
    count(line, &rest, 2, "DIMS")?;
    let n: usize = parse(line, rest[0])?;
    let m: usize = parse(line, rest[1])?;

    ls.header(&["ROWS"])?;
    let mut atrip = Vec::new();
    let mut kinds = Vec::with_capacity(m);
    for i in 0..m {
        let (line, toks) = ls.next("a row")?;
        let kind = ConeRowKind::from_token(toks[0]).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown row kind {:?}", toks[0]),
        })?;
        if toks.len() < 2 {
            return ls.err(line, "row without entry count");
        }
        let nnz: usize = parse(line, toks[1])?;
        count(line, &toks[2..], 2 * nnz, "row entries")?;
        for e in 0..nnz {
            let j: usize = parse(line, toks[2 + 2 * e])?;
            if j >= n {
                return ls.err(line, format!("column {j} out of range"));
            }
            atrip.push((i, j, parse(line, toks[3 + 2 * e])?));
        }
        kinds.push(kind);
    }

    ls.header(&["RHS"])?;
    let b: Vec<f64> = if m == 0 {
        vec![]
    } else {
        let (line, toks) = ls.next("right-hand sides")?;
        count(line, &toks, m, "RHS")?;
        toks.iter().map(|t| parse(line, t)).collect::<Result<_>>()?
    };

    let (line, rest) = ls.header(&["MAT", "M"])?;
    count(line, &rest, 1, "MAT M")?;
    let nnz: usize = parse(line, rest[0])?;
    let mut mtrip = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (line, toks) = ls.next("a matrix entry")?;
        count(line, &toks, 3, "matrix entry")?;
        let (i, j): (usize, usize) = (parse(line, toks[0])?, parse(line, toks[1])?);
        if i >= n || j >= n {
            return ls.err(line, format!("entry ({i}, {j}) out of range"));
        }
        mtrip.push((i, j, parse(line, toks[2])?));
    }

    ls.header(&["VEC", "q"])?;
    let q: Vec<f64> = if n == 0 {
        vec![]
    } else {
        let (line, toks) = ls.next("q")?;
        count(line, &toks, n, "q")?;
        toks.iter().map(|t| parse(line, t)).collect::<Result<_>>()?
    };

    ls.header(&["BOUNDS"])?;
    let mut l = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, toks) = ls.next("a bound pair")?;
        count(line, &toks, 2, "bounds")?;
        l.push(parse(line, toks[0])?);
        u.push(parse(line, toks[1])?);
    }
    let (line, _) = ls.header(&["END"])?;
    let to_parse = |e: Error| match e {
        Error::InvalidProblem(msg) => Error::Parse { line, msg },
        e => e,
    };
    let a = SparseMatrix::from_triplets(m, n, &atrip).map_err(to_parse)?;
    let mm = SparseMatrix::from_triplets(n, n, &mtrip).map_err(to_parse)?;
    AviProblem::new(mm, q, a, b, kinds, l, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "DIMS 1 0\nROWS\nRHS\nMAT M 1\n0 0 1\nVEC q\n-1\nBOUNDS\n0 inf\nEND\n";

    #[test]
    fn minimal_lcp() {
        let p = parse_avi(MINIMAL).unwrap();
        assert_eq!(p, AviProblem::lcp(SparseMatrix::identity(1), vec![-1.0]).unwrap());
    }

    #[test]
    fn mixed_rows_round_trip() {
        let p = AviProblem::new(
            SparseMatrix::from_dense(&[vec![0.1, -1.0 / 3.0], vec![0.0, 2.0]]),
            vec![std::f64::consts::PI, -0.0],
            SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1e-300, 0.0], vec![0.0, -7.5]]),
            vec![1.0, -2.0, 3.0],
            vec![ConeRowKind::Eq, ConeRowKind::Ge, ConeRowKind::Le],
            vec![f64::NEG_INFINITY, 0.0],
            vec![f64::INFINITY, 1.0 / 7.0],
        )
        .unwrap();
        let text = format_avi(&p);
        let back = parse_avi(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.q[1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(format_avi(&back), text);
    }

    #[test]
    fn truncated_file_reports_line() {
        let cut = &MINIMAL[..MINIMAL.find("BOUNDS").unwrap()];
        match parse_avi(cut) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_token_reports_line() {
        let bad = MINIMAL.replace("0 0 1", "0 0 one");
        assert!(matches!(parse_avi(&bad), Err(Error::Parse { line: 5, .. })));
        let bad = MINIMAL.replace("0 0 1", "0 3 1");
        assert!(matches!(parse_avi(&bad), Err(Error::Parse { line: 5, .. })));
    }
}
