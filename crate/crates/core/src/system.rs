//! The complementary system in column form.
//!
//! Rows are the stationarity block (`n` rows) followed by one row per live
//! constraint:
//!
//! ```text
//! Mz - Aᵀλ - w + v - t·r = -q
//! Az - s                 =  b
//! ```

use std::fmt;

use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::{SparseMatrix, SparseVector};

/// A column of the complementary system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z(usize),
    Lam(usize),
    W(usize),
    V(usize),
    S(usize),
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Z(j) => write!(f, "z{j}"),
            Var::Lam(i) => write!(f, "lambda{i}"),
            Var::W(j) => write!(f, "w{j}"),
            Var::V(j) => write!(f, "v{j}"),
            Var::S(i) => write!(f, "s{i}"),
            Var::T => write!(f, "t"),
        }
    }
}

/// Column layout of the system for one problem.
#[derive(Debug, Clone)]
pub struct SystemLayout {
    pub n: usize,
    pub m: usize,
    /// Live constraint rows in order; the system row of constraint `i` is
    /// `n + row_pos[i]`.
    pub rows: Vec<usize>,
    pub row_pos: Vec<usize>,
    at: SparseMatrix,
}

impl SystemLayout {
    pub fn new(p: &AviProblem, dropped: &[usize]) -> Self {
        let m = p.m();
        let rows: Vec<usize> = (0..m).filter(|i| !dropped.contains(i)).collect();
        let mut row_pos = vec![usize::MAX; m];
        for (k, &i) in rows.iter().enumerate() {
            row_pos[i] = k;
        }
        Self {
            n: p.n(),
            m,
            rows,
            row_pos,
            at: p.a.transpose(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n + self.rows.len()
    }

    /// Flat id used for ordering and for indexing value arrays.
    pub fn id(&self, v: Var) -> usize {
        let (n, m) = (self.n, self.m);
        match v {
            Var::Z(j) => j,
            Var::Lam(i) => n + i,
            Var::W(j) => n + m + j,
            Var::V(j) => 2 * n + m + j,
            Var::S(i) => 3 * n + m + i,
            Var::T => 3 * n + 2 * m,
        }
    }

    pub fn nvars(&self) -> usize {
        3 * self.n + 2 * self.m + 1
    }

    pub fn var(&self, id: usize) -> Var {
        let (n, m) = (self.n, self.m);
        if id < n {
            Var::Z(id)
        } else if id < n + m {
            Var::Lam(id - n)
        } else if id < 2 * n + m {
            Var::W(id - n - m)
        } else if id < 3 * n + m {
            Var::V(id - 2 * n - m)
        } else if id < 3 * n + 2 * m {
            Var::S(id - 3 * n - m)
        } else {
            Var::T
        }
    }

    /// Column of `v` in the system; `r` is the covering vector.
    pub fn column(&self, p: &AviProblem, v: Var, r: &[f64]) -> SparseVector {
        let n = self.n;
        let mut e: Vec<(usize, f64)> = match v {
            Var::Z(j) => p
                .m_mat
                .col(j)
                .chain(
                    p.a.col(j)
                        .filter(|&(i, _)| self.row_pos[i] != usize::MAX)
                        .map(|(i, a)| (n + self.row_pos[i], a)),
                )
                .collect(),
            Var::Lam(i) => self.at.col(i).map(|(j, a)| (j, -a)).collect(),
            Var::W(j) => vec![(j, -1.0)],
            Var::V(j) => vec![(j, 1.0)],
            Var::S(i) => vec![(n + self.row_pos[i], -1.0)],
            Var::T => r.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(j, &x)| (j, -x)).collect(),
        };
        e.sort_by_key(|x| x.0);
        SparseVector {
            indices: e.iter().map(|x| x.0).collect(),
            values: e.iter().map(|x| x.1).collect(),
        }
    }

    pub fn rhs(&self, p: &AviProblem) -> Vec<f64> {
        let mut out: Vec<f64> = p.q.iter().map(|x| -x).collect();
        out.extend(self.rows.iter().map(|&i| p.b[i]));
        out
    }
}

/// Bounds of a system variable.
pub fn bounds(p: &AviProblem, v: Var) -> (f64, f64) {
    const INF: f64 = f64::INFINITY;
    match v {
        Var::Z(j) => (p.l[j], p.u[j]),
        Var::W(_) | Var::V(_) | Var::T => (0.0, INF),
        Var::Lam(i) => match p.kinds[i] {
            ConeRowKind::Ge => (0.0, INF),
            ConeRowKind::Le => (-INF, 0.0),
            ConeRowKind::Eq => (-INF, INF),
        },
        Var::S(i) => match p.kinds[i] {
            ConeRowKind::Ge => (0.0, INF),
            ConeRowKind::Le => (-INF, 0.0),
            ConeRowKind::Eq => (0.0, 0.0),
        },
    }
}
