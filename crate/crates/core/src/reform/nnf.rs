//! Counting nonempty faces of `C`.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::problem::{AviProblem, ConeRowKind};
use crate::simplex::{solve_lp, LpProblem, LpStatus};
use crate::sparse::SparseMatrix;

pub const EXACT_MAX_N: usize = 5;
pub const EXACT_MAX_M: usize = 8;

const FACE_TOL: f64 = 1e-9;

/// Nonempty faces of the interval `[l, u]`.
pub fn nnf_interval(l: f64, u: f64) -> Result<u32> {
    if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("empty interval [{l}, {u}]")));
    }
    Ok(match (l.is_finite(), u.is_finite()) {
        (false, false) => 1,
        (true, true) if l == u => 1,
        (true, true) => 3,
        _ => 2,
    })
}

/// Nonempty faces of a halfspace (2) or hyperplane (1).
pub fn nnf_halfspace(kind: ConeRowKind) -> u32 {
    match kind {
        ConeRowKind::Eq => 1,
        ConeRowKind::Ge | ConeRowKind::Le => 2,
    }
}

/// Product of the interval and row counts.
pub fn nnf_upper_bound(p: &AviProblem) -> BigUint {
    let mut out = BigUint::from(1u32);
    for j in 0..p.n() {
        out *= nnf_interval(p.l[j], p.u[j]).unwrap_or(1);
    }
    for &k in &p.kinds {
        out *= nnf_halfspace(k);
    }
    out
}

/// Face count of the box `B₁ × B₂` of the box reformulation, where `B₂`
/// holds the multiplier bounds.
pub fn nnf_mcp_product(p: &AviProblem) -> BigUint {
    let mut out = BigUint::from(1u32);
    for j in 0..p.n() {
        out *= nnf_interval(p.l[j], p.u[j]).unwrap_or(1);
    }
    for &k in &p.kinds {
        let (lo, hi) = match k {
            ConeRowKind::Ge => (0.0, f64::INFINITY),
            ConeRowKind::Le => (f64::NEG_INFINITY, 0.0),
            ConeRowKind::Eq => (f64::NEG_INFINITY, f64::INFINITY),
        };
        out *= nnf_interval(lo, hi).expect("valid multiplier interval");
    }
    out
}

/// The inequalities `gᵀz ≥ c` and equalities of `C`, rows scaled to unit
/// max-norm.
#[derive(Debug, Clone)]
pub struct Constraints {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// Equalities are tight on every face.
    pub equality: Vec<bool>,
}

impl Constraints {
    pub fn new(p: &AviProblem) -> Self {
        let n = p.n();
        let mut c = Constraints {
            n,
            rows: Vec::new(),
            rhs: Vec::new(),
            equality: Vec::new(),
        };
        let mut push = |row: Vec<f64>, rhs: f64, eq: bool| {
            let s = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if s == 0.0 {
                return;
            }
            c.rows.push(row.iter().map(|x| x / s).collect());
            c.rhs.push(rhs / s);
            c.equality.push(eq);
        };
        for i in 0..p.m() {
            let row = p.a.row_dense(i);
            match p.kinds[i] {
                ConeRowKind::Ge => push(row, p.b[i], false),
                ConeRowKind::Le => push(row.iter().map(|x| -x).collect(), -p.b[i], false),
                ConeRowKind::Eq => push(row, p.b[i], true),
            }
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            if p.is_fixed(j) {
                push(e, p.l[j], true);
                continue;
            }
            if p.l[j].is_finite() {
                push(e.clone(), p.l[j], false);
            }
            if p.u[j].is_finite() {
                e[j] = -1.0;
                push(e, -p.u[j], false);
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// LP over the face where `tight` holds with equality; with `margin`
    /// the remaining rows read `gᵀz - ε ≥ c` and `ε ≤ 1` is maximized.
    fn face_lp(&self, tight: &BTreeSet<usize>, margin: bool, objective: Option<usize>) -> LpProblem {
        let n = self.n;
        let nv = if margin { n + 1 } else { n };
        let mut trip = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (k, row) in self.rows.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    trip.push((k, j, a));
                }
            }
            let fixed = self.equality[k] || tight.contains(&k);
            if margin && !fixed {
                trip.push((k, n, -1.0));
            }
            lo.push(self.rhs[k]);
            hi.push(if fixed { self.rhs[k] } else { f64::INFINITY });
        }
        let a = SparseMatrix::from_triplets(self.len(), nv, &trip).expect("constraint rows");
        let mut l = vec![f64::NEG_INFINITY; nv];
        let mut u = vec![f64::INFINITY; nv];
        let mut c = vec![0.0; nv];
        if margin {
            l[n] = f64::NEG_INFINITY;
            u[n] = 1.0;
            c[n] = -1.0;
        }
        if let Some(k) = objective {
            for (j, &a) in self.rows[k].iter().enumerate() {
                c[j] = -a;
            }
        }
        LpProblem::ranged(a, lo, hi, l, u, c)
    }

    /// Tight set of the face generated by `tight`, or `None` when empty.
    pub fn closure(&self, tight: &BTreeSet<usize>) -> Result<Option<BTreeSet<usize>>> {
        let res = solve_lp(&self.face_lp(tight, true, None))?;
        let eps = match res.status {
            LpStatus::Infeasible(_) => return Ok(None),
            LpStatus::Unbounded => 1.0,
            LpStatus::Optimal => -res.objective,
        };
        let mut out: BTreeSet<usize> = tight.clone();
        out.extend((0..self.len()).filter(|&k| self.equality[k]));
        if eps < -FACE_TOL {
            return Ok(None);
        }
        if eps > FACE_TOL {
            return Ok(Some(out));
        }
        for k in 0..self.len() {
            if out.contains(&k) {
                continue;
            }
            let r = solve_lp(&self.face_lp(tight, false, Some(k)))?;
            if let LpStatus::Optimal = r.status {
                if -r.objective <= self.rhs[k] + FACE_TOL {
                    out.insert(k);
                }
            }
        }
        Ok(Some(out))
    }
}

/// Exact count of the nonempty faces of `C` for tiny instances.
pub fn nnf_exact(p: &AviProblem) -> Result<u64> {
    Ok(enumerate_faces(p)?.1.len() as u64)
}

/// All nonempty faces of `C`, each given by the set of constraints tight
/// on all of it. Faces are reached by adding one constraint at a time to a
/// known face.
pub fn enumerate_faces(p: &AviProblem) -> Result<(Constraints, Vec<BTreeSet<usize>>)> {
    if p.n() > EXACT_MAX_N || p.m() > EXACT_MAX_M {
        return Err(Error::SizeCapExceeded(format!(
            "exact face count needs n ≤ {EXACT_MAX_N} and m ≤ {EXACT_MAX_M}, got n = {} and m = {}",
            p.n(),
            p.m()
        )));
    }
    let cons = Constraints::new(p);
    let Some(root) = cons.closure(&BTreeSet::new())? else {
        return Ok((cons, Vec::new()));
    };
    let mut seen: HashSet<BTreeSet<usize>> = HashSet::new();
    let mut order = vec![root.clone()];
    let mut stack = vec![root.clone()];
    seen.insert(root);
    while let Some(face) = stack.pop() {
        for k in 0..cons.len() {
            if face.contains(&k) {
                continue;
            }
            let mut next = face.clone();
            next.insert(k);
            if let Some(c) = cons.closure(&next)? {
                if seen.insert(c.clone()) {
                    order.push(c.clone());
                    stack.push(c);
                }
            }
        }
    }
    Ok((cons, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn interval_table() {
        assert_eq!(nnf_interval(-INF, INF).unwrap(), 1);
        assert_eq!(nnf_interval(2.0, 2.0).unwrap(), 1);
        assert_eq!(nnf_interval(0.0, INF).unwrap(), 2);
        assert_eq!(nnf_interval(-INF, 0.0).unwrap(), 2);
        assert_eq!(nnf_interval(0.0, 1.0).unwrap(), 3);
        assert!(nnf_interval(1.0, 0.0).is_err());
    }

    #[test]
    fn row_table() {
        assert_eq!(nnf_halfspace(ConeRowKind::Ge), 2);
        assert_eq!(nnf_halfspace(ConeRowKind::Le), 2);
        assert_eq!(nnf_halfspace(ConeRowKind::Eq), 1);
    }

    #[test]
    fn segment_has_three_faces() {
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            SparseMatrix::from_dense(&[vec![1.0, 1.0]]),
            vec![1.0],
            vec![ConeRowKind::Eq],
            vec![0.0; 2],
            vec![INF; 2],
        )
        .unwrap();
        assert_eq!(nnf_exact(&p).unwrap(), 3);
        assert_eq!(nnf_upper_bound(&p), BigUint::from(4u32));
    }

    #[test]
    fn empty_set_has_no_faces() {
        let p = AviProblem::new(
            SparseMatrix::identity(1),
            vec![0.0],
            SparseMatrix::from_dense(&[vec![1.0]]),
            vec![2.0],
            vec![ConeRowKind::Ge],
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        assert_eq!(nnf_exact(&p).unwrap(), 0);
    }

    #[test]
    fn caps() {
        let p = AviProblem::lcp(SparseMatrix::identity(6), vec![0.0; 6]).unwrap();
        assert!(matches!(nnf_exact(&p), Err(Error::SizeCapExceeded(_))));
        assert_eq!(nnf_upper_bound(&p), BigUint::from(64u32));
    }
}
