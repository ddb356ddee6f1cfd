//! The AVI data `AVI(C, q, M)` with `C = {z : Az - b ∈ K, l ≤ z ≤ u}`,
//! validation, and optimality measurement.

use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseMatrix;

/// Cone of a single constraint row: `A_i z - b_i ∈ K_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeRowKind {
    /// `K_i = ℝ₊`
    Ge,
    /// `K_i = {0}`
    Eq,
    /// `K_i = ℝ₋`
    Le,
}

impl ConeRowKind {
    /// Distance of `x` from `K_i`.
    pub fn violation(self, x: f64) -> f64 {
        match self {
            ConeRowKind::Ge => (-x).max(0.0),
            ConeRowKind::Le => x.max(0.0),
            ConeRowKind::Eq => x.abs(),
        }
    }

    /// Distance of a multiplier `y` from the dual cone `K_i^D`.
    pub fn dual_violation(self, y: f64) -> f64 {
        match self {
            ConeRowKind::Ge => (-y).max(0.0),
            ConeRowKind::Le => y.max(0.0),
            ConeRowKind::Eq => 0.0,
        }
    }

    /// Sign of the inequality: `+1` for GE, `-1` for LE, `0` for EQ.
    pub fn sign(self) -> f64 {
        match self {
            ConeRowKind::Ge => 1.0,
            ConeRowKind::Le => -1.0,
            ConeRowKind::Eq => 0.0,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ConeRowKind::Ge => "GE",
            ConeRowKind::Eq => "EQ",
            ConeRowKind::Le => "LE",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "GE" | "ge" | ">=" => Some(ConeRowKind::Ge),
            "EQ" | "eq" | "=" => Some(ConeRowKind::Eq),
            "LE" | "le" | "<=" => Some(ConeRowKind::Le),
            _ => None,
        }
    }
}

/// Problem data. Dimensions are checked on construction; the remaining
/// invariants are reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct AviProblem {
    pub m_mat: SparseMatrix,
    pub q: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub kinds: Vec<ConeRowKind>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl AviProblem {
    pub fn new(
        m_mat: SparseMatrix,
        q: Vec<f64>,
        a: SparseMatrix,
        b: Vec<f64>,
        kinds: Vec<ConeRowKind>,
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self> {
        let n = q.len();
        check_len("M rows", n, m_mat.nrows())?;
        check_len("M cols", n, m_mat.ncols())?;
        check_len("A cols", n, a.ncols())?;
        let m = a.nrows();
        check_len("b", m, b.len())?;
        check_len("row kinds", m, kinds.len())?;
        check_len("l", n, l.len())?;
        check_len("u", n, u.len())?;
        Ok(Self {
            m_mat,
            q,
            a,
            b,
            kinds,
            l,
            u,
        })
    }

    /// `LCP(M, q)`: no rows, `z ≥ 0`.
    pub fn lcp(m_mat: SparseMatrix, q: Vec<f64>) -> Result<Self> {
        let n = q.len();
        Self::new(
            m_mat,
            q,
            SparseMatrix::zeros(0, n),
            vec![],
            vec![],
            vec![0.0; n],
            vec![f64::INFINITY; n],
        )
    }

    /// Box-constrained problem without rows.
    pub fn boxed(m_mat: SparseMatrix, q: Vec<f64>, l: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        let n = q.len();
        Self::new(m_mat, q, SparseMatrix::zeros(0, n), vec![], vec![], l, u)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.l[j] == f64::NEG_INFINITY && self.u[j] == f64::INFINITY
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.l[j] == self.u[j]
    }

    /// Same feasible set, different `M` and `q`.
    pub fn with_affine(&self, m_mat: SparseMatrix, q: Vec<f64>) -> Result<Self> {
        Self::new(
            m_mat,
            q,
            self.a.clone(),
            self.b.clone(),
            self.kinds.clone(),
            self.l.clone(),
            self.u.clone(),
        )
    }

    /// The recession cone `rec C` as a problem over the same `M`, `q`:
    /// `b = 0` and every finite bound moved to zero.
    pub fn recession(&self) -> Self {
        let zb = |x: f64| if x.is_finite() { 0.0 } else { x };
        Self {
            m_mat: self.m_mat.clone(),
            q: self.q.clone(),
            a: self.a.clone(),
            b: vec![0.0; self.m()],
            kinds: self.kinds.clone(),
            l: self.l.iter().map(|&x| zb(x)).collect(),
            u: self.u.iter().map(|&x| zb(x)).collect(),
        }
    }

    /// Maximum violation of `z ∈ C`.
    pub fn primal_violation(&self, z: &[f64]) -> f64 {
        let az = self.a.mul_vec(z);
        let mut worst: f64 = 0.0;
        for i in 0..self.m() {
            worst = worst.max(self.kinds[i].violation(az[i] - self.b[i]));
        }
        for j in 0..self.n() {
            worst = worst.max(self.l[j] - z[j]).max(z[j] - self.u[j]);
        }
        worst
    }
}

/// One failed invariant of [`AviProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Reports every broken invariant. Empty means the instance is well formed.
pub fn validate(p: &AviProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, index, message: String| out.push(Violation { field, index, message });
    let n = p.n();
    if p.m_mat.nrows() != n || p.m_mat.ncols() != n {
        push("M", None, format!("M is {}x{}, expected {n}x{n}", p.m_mat.nrows(), p.m_mat.ncols()));
    }
    if p.a.ncols() != n || p.a.nrows() != p.m() || p.kinds.len() != p.m() {
        push("A", None, "A, b and row kinds disagree in shape".to_string());
    }
    for (j, &v) in p.q.iter().enumerate() {
        if !v.is_finite() {
            push("q", Some(j), format!("q_{j} is not finite"));
        }
    }
    for (i, &v) in p.b.iter().enumerate() {
        if !v.is_finite() {
            push("b", Some(i), format!("b_{i} is not finite"));
        }
    }
    for j in 0..n.min(p.l.len()).min(p.u.len()) {
        let (l, u) = (p.l[j], p.u[j]);
        if l.is_nan() || u.is_nan() {
            push("l", Some(j), format!("bound {j} is NaN"));
        } else if l > u {
            push("l", Some(j), format!("l_{j} > u_{j}"));
        } else if l == f64::INFINITY {
            push("l", Some(j), format!("l_{j} = +inf"));
        } else if u == f64::NEG_INFINITY {
            push("u", Some(j), format!("u_{j} = -inf"));
        }
    }
    if p.a.nrows() == p.m() {
        let mut row_nnz = vec![0usize; p.a.nrows()];
        for (i, _, _) in p.a.triplets() {
            row_nnz[i] += 1;
        }
        for (i, &c) in row_nnz.iter().enumerate() {
            if c == 0 {
                push("A", Some(i), format!("A row {i} empty"));
            }
        }
    }
    out
}

/// Primal point with all multipliers and slacks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

impl Solution {
    /// Builds a solution from `z` and `λ`, filling `s = Az - b` and splitting
    /// the remaining gradient `Mz + q - Aᵀλ` into `w - v` by sign. Sides
    /// without a finite bound get no multiplier.
    pub fn from_primal_dual(p: &AviProblem, z: Vec<f64>, lambda: Vec<f64>) -> Self {
        let mut g = eval_f_unchecked(p, &z);
        let atl = p.a.tr_mul_vec(&lambda);
        for j in 0..g.len() {
            g[j] -= atl[j];
        }
        let w = (0..g.len())
            .map(|j| if p.l[j].is_finite() { g[j].max(0.0) } else { 0.0 })
            .collect();
        let v = (0..g.len())
            .map(|j| if p.u[j].is_finite() { (-g[j]).max(0.0) } else { 0.0 })
            .collect();
        let mut s = p.a.mul_vec(&z);
        for (si, bi) in s.iter_mut().zip(&p.b) {
            *si -= bi;
        }
        Self { z, lambda, w, v, s }
    }
}

/// `Mz + q`.
#[allow(non_snake_case)]
pub fn eval_F(p: &AviProblem, z: &[f64]) -> Result<Vec<f64>> {
    check_len("z", p.n(), z.len())?;
    Ok(eval_f_unchecked(p, z))
}

fn eval_f_unchecked(p: &AviProblem, z: &[f64]) -> Vec<f64> {
    let mut y = p.m_mat.mul_vec(z);
    for (yj, qj) in y.iter_mut().zip(&p.q) {
        *yj += qj;
    }
    y
}

/// The four KKT residual components, all in the max norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal_feas: f64,
    pub complementarity: f64,
    pub dual_cone_feas: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feas)
            .max(self.complementarity)
            .max(self.dual_cone_feas)
    }

    /// Stationarity and feasibility are scaled by `1 + ‖q‖∞`;
    /// complementarity is absolute.
    pub fn within(&self, tol: f64, q_norm: f64) -> bool {
        let rel = tol * (1.0 + q_norm);
        self.stationarity <= rel
            && self.primal_feas <= rel
            && self.dual_cone_feas <= rel
            && self.complementarity <= tol.max(rel)
    }
}

fn comp_term(gap: f64, mult: f64) -> f64 {
    if mult == 0.0 {
        0.0
    } else if gap.is_infinite() {
        f64::INFINITY
    } else {
        (gap * mult).abs()
    }
}

pub fn kkt_residual(p: &AviProblem, sol: &Solution) -> Result<KktResidual> {
    let (n, m) = (p.n(), p.m());
    check_len("z", n, sol.z.len())?;
    check_len("lambda", m, sol.lambda.len())?;
    check_len("w", n, sol.w.len())?;
    check_len("v", n, sol.v.len())?;
    check_len("s", m, sol.s.len())?;

    let mut g = eval_f_unchecked(p, &sol.z);
    let atl = p.a.tr_mul_vec(&sol.lambda);
    let mut r = KktResidual::default();
    for j in 0..n {
        g[j] += -atl[j] - sol.w[j] + sol.v[j];
        r.stationarity = r.stationarity.max(g[j].abs());
    }

    let az = p.a.mul_vec(&sol.z);
    for i in 0..m {
        let slack = az[i] - p.b[i];
        r.primal_feas = r.primal_feas.max(p.kinds[i].violation(slack));
        r.dual_cone_feas = r.dual_cone_feas.max(p.kinds[i].dual_violation(sol.lambda[i]));
        r.complementarity = r.complementarity.max((slack * sol.lambda[i]).abs());
    }
    for j in 0..n {
        let z = sol.z[j];
        r.primal_feas = r.primal_feas.max(p.l[j] - z).max(z - p.u[j]);
        r.dual_cone_feas = r.dual_cone_feas.max(-sol.w[j]).max(-sol.v[j]);
        r.complementarity = r
            .complementarity
            .max(comp_term(z - p.l[j], sol.w[j]))
            .max(comp_term(p.u[j] - z, sol.v[j]));
    }
    Ok(r)
}

/// Record of fixed variables substituted out of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedElimination {
    n_full: usize,
    /// Original index of each kept variable.
    keep: Vec<usize>,
    /// `(index, value)` of each fixed variable.
    fixed: Vec<(usize, f64)>,
    /// Original index of each kept row.
    rows: Vec<usize>,
}

impl FixedElimination {
    pub fn is_trivial(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn fixed(&self) -> &[(usize, f64)] {
        &self.fixed
    }

    /// Original-problem solution from a reduced one. Bound multipliers of
    /// fixed variables absorb the remaining gradient by sign; dropped rows
    /// get zero multipliers.
    pub fn restore(&self, p: &AviProblem, red: &Solution) -> Solution {
        let mut z = vec![0.0; self.n_full];
        for (k, &j) in self.keep.iter().enumerate() {
            z[j] = red.z[k];
        }
        for &(j, val) in &self.fixed {
            z[j] = val;
        }
        let mut lambda = vec![0.0; p.m()];
        for (k, &i) in self.rows.iter().enumerate() {
            lambda[i] = red.lambda[k];
        }
        let mut out = Solution::from_primal_dual(p, z, lambda);
        for (k, &j) in self.keep.iter().enumerate() {
            out.w[j] = red.w[k];
            out.v[j] = red.v[k];
        }
        out
    }

    /// Expands a per-row vector of the reduced problem; dropped rows get 0.
    pub fn restore_rows(&self, m_full: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m_full];
        for (k, &i) in self.rows.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }

    pub fn restore_direction(&self, dz: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (k, &j) in self.keep.iter().enumerate() {
            out[j] = dz[k];
        }
        out
    }
}

/// Substitutes `z_j := l_j` for every `l_j = u_j`, folding the value into
/// `q` and `b`. Rows left without entries are dropped when satisfied and
/// reported as `InvalidProblem` otherwise.
pub fn eliminate_fixed(p: &AviProblem) -> Result<(AviProblem, FixedElimination)> {
    let n = p.n();
    let mut keep = Vec::new();
    let mut fixed = Vec::new();
    let mut z_fix = vec![0.0; n];
    for j in 0..n {
        if p.is_fixed(j) {
            fixed.push((j, p.l[j]));
            z_fix[j] = p.l[j];
        } else {
            keep.push(j);
        }
    }
    if fixed.is_empty() {
        let elim = FixedElimination {
            n_full: n,
            keep,
            fixed,
            rows: (0..p.m()).collect(),
        };
        return Ok((p.clone(), elim));
    }
    let mut new_idx = vec![usize::MAX; n];
    for (k, &j) in keep.iter().enumerate() {
        new_idx[j] = k;
    }
    let mz = p.m_mat.mul_vec(&z_fix);
    let az = p.a.mul_vec(&z_fix);

    let mut row_has_free = vec![false; p.m()];
    for (i, j, _) in p.a.triplets() {
        if new_idx[j] != usize::MAX {
            row_has_free[i] = true;
        }
    }
    let mut rows = Vec::new();
    let mut new_row = vec![usize::MAX; p.m()];
    for i in 0..p.m() {
        let r = az[i] - p.b[i];
        if row_has_free[i] {
            new_row[i] = rows.len();
            rows.push(i);
        } else if p.kinds[i].violation(r) > 1e-12 * (1.0 + p.b[i].abs()) {
            return Err(Error::InvalidProblem(format!(
                "row {i} is violated by the fixed variables"
            )));
        }
    }

    let mt: Vec<_> = p
        .m_mat
        .triplets()
        .filter(|&(i, j, _)| new_idx[i] != usize::MAX && new_idx[j] != usize::MAX)
        .map(|(i, j, v)| (new_idx[i], new_idx[j], v))
        .collect();
    let at: Vec<_> = p
        .a
        .triplets()
        .filter(|&(i, j, _)| new_row[i] != usize::MAX && new_idx[j] != usize::MAX)
        .map(|(i, j, v)| (new_row[i], new_idx[j], v))
        .collect();
    let nk = keep.len();
    let red = AviProblem::new(
        SparseMatrix::from_triplets(nk, nk, &mt)?,
        keep.iter().map(|&j| p.q[j] + mz[j]).collect(),
        SparseMatrix::from_triplets(rows.len(), nk, &at)?,
        rows.iter().map(|&i| p.b[i] - az[i]).collect(),
        rows.iter().map(|&i| p.kinds[i]).collect(),
        keep.iter().map(|&j| p.l[j]).collect(),
        keep.iter().map(|&j| p.u[j]).collect(),
    )?;
    Ok((
        red,
        FixedElimination {
            n_full: n,
            keep,
            fixed,
            rows,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn segment() -> AviProblem {
        AviProblem::new(
            dense(&[&[1.0, 0.0], &[0.0, -1.0]]),
            vec![0.0, 0.0],
            dense(&[&[1.0, 1.0]]),
            vec![1.0],
            vec![ConeRowKind::Eq],
            vec![0.0, 0.0],
            vec![f64::INFINITY; 2],
        )
        .unwrap()
    }

    #[test]
    fn validate_reports_bound_order() {
        let p = AviProblem::boxed(dense(&[&[1.0]]), vec![0.0], vec![0.0], vec![-1.0]).unwrap();
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "l_0 > u_0");
    }

    #[test]
    fn validate_reports_empty_row() {
        let p = AviProblem::new(
            dense(&[&[1.0]]),
            vec![0.0],
            SparseMatrix::zeros(1, 1),
            vec![0.0],
            vec![ConeRowKind::Ge],
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "A row 0 empty");
    }

    #[test]
    fn validate_accepts_well_formed() {
        let p = AviProblem::new(
            dense(&[&[1.0]]),
            vec![0.0],
            dense(&[&[1.0], &[2.0]]),
            vec![0.0, 1.0],
            vec![ConeRowKind::Ge, ConeRowKind::Le],
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn eval_f_examples() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
        assert_eq!(eval_F(&p, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let p = AviProblem::lcp(SparseMatrix::zeros(1, 1), vec![3.0]).unwrap();
        assert_eq!(eval_F(&p, &[7.0]).unwrap(), vec![3.0]);
        let p = AviProblem::lcp(dense(&[&[2.0, 4.0], &[-1.0, -5.0]]), vec![1.0, 1.0]).unwrap();
        assert_eq!(eval_F(&p, &[1.0, 0.0]).unwrap(), vec![3.0, 0.0]);
        assert!(eval_F(&p, &[1.0]).is_err());
    }

    #[test]
    fn kkt_lcp_witness() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
        let sol = Solution {
            z: vec![1.0, 1.0],
            w: vec![0.0; 2],
            v: vec![0.0; 2],
            ..Default::default()
        };
        assert_eq!(kkt_residual(&p, &sol).unwrap().max(), 0.0);
        let sol = Solution {
            z: vec![0.0, 0.0],
            ..sol
        };
        let r = kkt_residual(&p, &sol).unwrap();
        assert_eq!(r.stationarity, 1.0);
    }

    #[test]
    fn kkt_equality_row_witness() {
        let p = segment();
        let sol = Solution {
            z: vec![0.0, 1.0],
            lambda: vec![-1.0],
            w: vec![1.0, 0.0],
            v: vec![0.0, 0.0],
            s: vec![0.0],
        };
        assert_eq!(kkt_residual(&p, &sol).unwrap().max(), 0.0);
    }

    #[test]
    fn fixed_variables_round_trip() {
        let p = AviProblem::new(
            dense(&[&[2.0, 1.0], &[1.0, 3.0]]),
            vec![-1.0, 0.0],
            dense(&[&[1.0, 1.0], &[0.0, 1.0]]),
            vec![1.0, 0.5],
            vec![ConeRowKind::Le, ConeRowKind::Le],
            vec![0.0, 0.5],
            vec![f64::INFINITY, 0.5],
        )
        .unwrap();
        let (red, elim) = eliminate_fixed(&p).unwrap();
        assert_eq!(red.n(), 1);
        assert_eq!(red.m(), 1);
        assert_eq!(red.q, vec![-0.5]);
        assert_eq!(red.b, vec![0.5]);
        // reduced problem: 2z - 0.5 ⟂ z ≥ 0, z ≤ 0.5 → z = 0.25
        let rs = Solution {
            z: vec![0.25],
            lambda: vec![0.0],
            w: vec![0.0],
            v: vec![0.0],
            s: vec![-0.25],
        };
        let full = elim.restore(&p, &rs);
        assert_eq!(full.z, vec![0.25, 0.5]);
        assert!(kkt_residual(&p, &full).unwrap().max() < 1e-12);
    }
}
