//! Bounded-variable revised simplex with Bland's rule.
//!
//! Problems have the form
//!
//! ```text
//! minimize cᵀx  subject to  Ax - s = b,  l ≤ x ≤ u,  s_lo ≤ s ≤ s_hi
//! ```
//!
//! Phase 1 starts from every structural variable at a bound (or zero when
//! free) and adds one artificial per row whose slack cannot absorb the
//! residual.

use crate::error::{Error, Result};
use crate::linalg::BasisFactorization;
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::{SparseMatrix, SparseVector};

const FEAS_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub s_lo: Vec<f64>,
    pub s_hi: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
}

impl LpProblem {
    /// Feasibility problem over the set `C` of an AVI.
    pub fn feasibility(p: &AviProblem) -> Self {
        let (s_lo, s_hi) = cone_slack_bounds(&p.kinds);
        Self {
            a: p.a.clone(),
            b: p.b.clone(),
            s_lo,
            s_hi,
            l: p.l.clone(),
            u: p.u.clone(),
            c: vec![0.0; p.n()],
        }
    }

    /// `minimize cᵀx` over `row_lo ≤ Ax ≤ row_hi`, `l ≤ x ≤ u`.
    pub fn ranged(a: SparseMatrix, row_lo: Vec<f64>, row_hi: Vec<f64>, l: Vec<f64>, u: Vec<f64>, c: Vec<f64>) -> Self {
        let m = a.nrows();
        Self {
            a,
            b: vec![0.0; m],
            s_lo: row_lo,
            s_hi: row_hi,
            l,
            u,
            c,
        }
    }

    pub fn n(&self) -> usize {
        self.l.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }
}

pub(crate) fn cone_slack_bounds(kinds: &[ConeRowKind]) -> (Vec<f64>, Vec<f64>) {
    kinds
        .iter()
        .map(|k| match k {
            ConeRowKind::Ge => (0.0, f64::INFINITY),
            ConeRowKind::Le => (f64::NEG_INFINITY, 0.0),
            ConeRowKind::Eq => (0.0, 0.0),
        })
        .unzip()
}

/// Row multipliers `y` proving `{x, s in their boxes : Ax - s = b}` empty:
/// `sup yᵀ(Ax - s) < yᵀb` over the boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
}

fn sup_linear(g: f64, lo: f64, hi: f64, zero_tol: f64) -> f64 {
    if g.abs() <= zero_tol {
        // contributes at most |g|·|finite bound|; infinite bounds ignored
        let m = [lo, hi].iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
        g.abs() * m
    } else if g > 0.0 {
        g * hi
    } else {
        g * lo
    }
}

impl FarkasCertificate {
    /// `yᵀb - sup yᵀ(Ax - s)`; positive means the certificate is valid.
    pub fn margin_lp(&self, lp: &LpProblem) -> f64 {
        let g = lp.a.tr_mul_vec(&self.y);
        let ynorm = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zero_tol = 1e-12 * ynorm * (1.0 + lp.a.norm_inf());
        let mut sup = 0.0;
        for j in 0..lp.n() {
            sup += sup_linear(g[j], lp.l[j], lp.u[j], zero_tol);
        }
        for i in 0..lp.m() {
            sup += sup_linear(-self.y[i], lp.s_lo[i], lp.s_hi[i], 0.0);
        }
        let yb: f64 = self.y.iter().zip(&lp.b).map(|(a, b)| a * b).sum();
        yb - sup
    }

    pub fn verify_lp(&self, lp: &LpProblem) -> bool {
        self.y.len() == lp.m() && self.margin_lp(lp) > 1e-9
    }

    /// Checks the certificate against the set `C` of `p`.
    pub fn verify(&self, p: &AviProblem) -> bool {
        self.verify_lp(&LpProblem::feasibility(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible(FarkasCertificate),
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
}

pub fn solve_lp(lp: &LpProblem) -> Result<LpResult> {
    let mut sx = Simplex::new(lp)?;
    if let Some(cert) = sx.phase1()? {
        return Ok(LpResult {
            status: LpStatus::Infeasible(cert),
            x: sx.x[..lp.n()].to_vec(),
            s: sx.x[lp.n()..lp.n() + lp.m()].to_vec(),
            objective: f64::NAN,
        });
    }
    let mut cost = vec![0.0; sx.nvars()];
    cost[..lp.n()].copy_from_slice(&lp.c);
    let bounded = sx.optimize(&cost)?;
    let x = sx.x[..lp.n()].to_vec();
    let objective = lp.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpResult {
        status: if bounded { LpStatus::Optimal } else { LpStatus::Unbounded },
        s: sx.x[lp.n()..lp.n() + lp.m()].to_vec(),
        x,
        objective,
    })
}

/// Working state of the simplex method. Variable ids: `0..n` structural,
/// `n..n+m` slacks, `n+m..n+2m` artificials.
#[derive(Debug, Clone)]
pub(crate) struct Simplex<'a> {
    lp: &'a LpProblem,
    n: usize,
    m: usize,
    /// Live rows in order; `row_pos[i]` is row `i`'s position or `usize::MAX`.
    rows: Vec<usize>,
    row_pos: Vec<usize>,
    pub(crate) lo: Vec<f64>,
    pub(crate) hi: Vec<f64>,
    art_sign: Vec<f64>,
    pub(crate) x: Vec<f64>,
    pub(crate) basis: Vec<usize>,
    pub(crate) in_basis: Vec<Option<usize>>,
    fact: BasisFactorization,
    pub(crate) dropped: Vec<usize>,
    iter_cap: usize,
}

impl<'a> Simplex<'a> {
    pub(crate) fn new(lp: &'a LpProblem) -> Result<Self> {
        let (n, m) = (lp.n(), lp.m());
        if lp.a.nrows() != m || lp.a.ncols() != n {
            return Err(Error::Dimension {
                what: "LP constraint matrix",
                expected: m * n,
                got: lp.a.nrows() * lp.a.ncols(),
            });
        }
        let nv = n + 2 * m;
        let mut lo = Vec::with_capacity(nv);
        let mut hi = Vec::with_capacity(nv);
        lo.extend_from_slice(&lp.l);
        hi.extend_from_slice(&lp.u);
        lo.extend_from_slice(&lp.s_lo);
        hi.extend_from_slice(&lp.s_hi);
        lo.extend(std::iter::repeat(0.0).take(m));
        hi.extend(std::iter::repeat(0.0).take(m));
        for j in 0..n + m {
            if lo[j] > hi[j] {
                return Err(Error::InvalidProblem(format!("variable {j} has empty bounds")));
            }
        }

        let mut x = vec![0.0; nv];
        for j in 0..n {
            x[j] = nonbasic_start(lo[j], hi[j]);
        }
        let ax = lp.a.mul_vec(&x[..n]);
        let mut art_sign = vec![1.0; m];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let need = ax[i] - lp.b[i];
            let (sl, sh) = (lo[n + i], hi[n + i]);
            // fixed slacks never start basic, so equality rows end up
            // active (or dropped as redundant)
            if need >= sl && need <= sh && sl < sh {
                x[n + i] = need;
                basis.push(n + i);
            } else {
                let clamped = need.clamp(sl, sh);
                x[n + i] = clamped;
                // Ax - s + σa = b  ⇒  σa = clamped - need
                let r = clamped - need;
                art_sign[i] = if r >= 0.0 { 1.0 } else { -1.0 };
                x[n + m + i] = r.abs();
                hi[n + m + i] = f64::INFINITY;
                basis.push(n + m + i);
            }
        }
        let mut in_basis = vec![None; nv];
        for (p, &v) in basis.iter().enumerate() {
            in_basis[v] = Some(p);
        }
        let rows: Vec<usize> = (0..m).collect();
        let row_pos = rows.clone();
        let mut sx = Self {
            lp,
            n,
            m,
            rows,
            row_pos,
            lo,
            hi,
            art_sign,
            x,
            basis,
            in_basis,
            fact: BasisFactorization::new(0, vec![])?,
            dropped: Vec::new(),
            iter_cap: 100 * (n + m) + 1000,
        };
        sx.refactor()?;
        Ok(sx)
    }

    pub(crate) fn nvars(&self) -> usize {
        self.n + 2 * self.m
    }

    fn is_artificial(&self, v: usize) -> bool {
        v >= self.n + self.m
    }

    /// Row of a slack or artificial.
    fn var_row(&self, v: usize) -> usize {
        if v >= self.n + self.m {
            v - self.n - self.m
        } else {
            v - self.n
        }
    }

    pub(crate) fn column(&self, v: usize) -> SparseVector {
        let (n, m) = (self.n, self.m);
        if v < n {
            let mut out = SparseVector::new();
            let mut entries: Vec<(usize, f64)> = self
                .lp
                .a
                .col(v)
                .filter(|&(i, _)| self.row_pos[i] != usize::MAX)
                .map(|(i, val)| (self.row_pos[i], val))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (i, val) in entries {
                out.indices.push(i);
                out.values.push(val);
            }
            out
        } else if v < n + m {
            SparseVector::unit(self.row_pos[v - n], -1.0)
        } else {
            SparseVector::unit(self.row_pos[v - n - m], self.art_sign[v - n - m])
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let cols: Vec<SparseVector> = self.basis.iter().map(|&v| self.column(v)).collect();
        self.fact = BasisFactorization::new(self.rows.len(), cols).map_err(|e| {
            Error::NumericalFailure(format!("simplex basis became singular ({e})"))
        })?;
        Ok(())
    }

    /// Recomputes basic values from the nonbasic ones.
    fn recompute(&mut self) -> Result<()> {
        let k = self.rows.len();
        let mut rhs: Vec<f64> = self.rows.iter().map(|&i| self.lp.b[i]).collect();
        for v in 0..self.nvars() {
            if self.in_basis[v].is_none() && self.x[v] != 0.0 {
                if v >= self.n && self.row_pos[self.var_row(v)] == usize::MAX {
                    continue;
                }
                for (i, a) in self.column(v).iter() {
                    rhs[i] -= a * self.x[v];
                }
            }
        }
        debug_assert_eq!(rhs.len(), k);
        let xb = self.fact.solve_forward(&rhs)?;
        for (p, &v) in self.basis.iter().enumerate() {
            self.x[v] = xb[p];
        }
        Ok(())
    }

    fn duals(&mut self, cost: &[f64]) -> Result<Vec<f64>> {
        let cb: Vec<f64> = self.basis.iter().map(|&v| cost[v]).collect();
        Ok(self.fact.solve_transpose(&cb)?)
    }

    /// Direction in which nonbasic `v` would improve a reduced cost `d`.
    fn improving_direction(&self, v: usize, d: f64) -> Option<f64> {
        let (lo, hi, x) = (self.lo[v], self.hi[v], self.x[v]);
        if lo == hi {
            return None;
        }
        let free = lo == f64::NEG_INFINITY && hi == f64::INFINITY;
        if free {
            if d < -PRICE_TOL {
                return Some(1.0);
            }
            if d > PRICE_TOL {
                return Some(-1.0);
            }
            return None;
        }
        if d < -PRICE_TOL && x < hi {
            Some(1.0)
        } else if d > PRICE_TOL && x > lo {
            Some(-1.0)
        } else {
            None
        }
    }

    /// Runs Bland's rule on `cost` until optimal (`true`) or unbounded
    /// (`false`). Artificials never enter.
    pub(crate) fn optimize(&mut self, cost: &[f64]) -> Result<bool> {
        for _ in 0..self.iter_cap {
            let y = self.duals(cost)?;
            let mut entering = None;
            for v in 0..self.n + self.m {
                if self.in_basis[v].is_some() || (v >= self.n && self.row_pos[v - self.n] == usize::MAX) {
                    continue;
                }
                let d = cost[v] - self.column(v).dot_dense(&y);
                if let Some(dir) = self.improving_direction(v, d) {
                    entering = Some((v, dir));
                    break;
                }
            }
            let Some((e, dir)) = entering else {
                return Ok(true);
            };
            if !self.step(e, dir)? {
                return Ok(false);
            }
        }
        Err(Error::NumericalFailure("simplex iteration cap reached".into()))
    }

    /// Moves nonbasic `e` in direction `dir`; returns false when unbounded.
    fn step(&mut self, e: usize, dir: f64) -> Result<bool> {
        let col = self.column(e);
        let alpha = self.fact.solve_forward_sparse(&col)?;
        let amax = alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ptol = PIVOT_TOL * amax.max(1.0);

        let mut best: Option<(f64, usize, usize)> = None; // (theta, var id, position)
        let consider = |best: &mut Option<(f64, usize, usize)>, theta: f64, var: usize, pos: usize| {
            let theta = theta.max(0.0);
            match *best {
                None => *best = Some((theta, var, pos)),
                Some((bt, bv, _)) => {
                    let tie = (theta - bt).abs() <= 1e-12 * (1.0 + bt);
                    if (tie && var < bv) || (!tie && theta < bt) {
                        *best = Some((theta, var, pos));
                    }
                }
            }
        };
        if self.lo[e].is_finite() && self.hi[e].is_finite() {
            consider(&mut best, self.hi[e] - self.lo[e], e, usize::MAX);
        }
        for (p, &bv) in self.basis.iter().enumerate() {
            let rate = -dir * alpha[p];
            if rate < -ptol && self.lo[bv].is_finite() {
                consider(&mut best, (self.x[bv] - self.lo[bv]) / -rate, bv, p);
            } else if rate > ptol && self.hi[bv].is_finite() {
                consider(&mut best, (self.hi[bv] - self.x[bv]) / rate, bv, p);
            }
        }
        let Some((theta, leave, pos)) = best else {
            return Ok(false);
        };
        if pos == usize::MAX {
            self.x[e] = if dir > 0.0 { self.hi[e] } else { self.lo[e] };
            self.recompute()?;
            return Ok(true);
        }
        self.x[e] += dir * theta;
        let rate = -dir * alpha[pos];
        self.x[leave] = if rate < 0.0 { self.lo[leave] } else { self.hi[leave] };
        self.fact
            .replace_column(pos, col)
            .map_err(|err| Error::NumericalFailure(format!("simplex pivot failed ({err})")))?;
        self.basis[pos] = e;
        self.in_basis[e] = Some(pos);
        self.in_basis[leave] = None;
        self.recompute()?;
        Ok(true)
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.m).map(|i| self.x[self.n + self.m + i].abs()).sum()
    }

    /// Phase 1. Returns a certificate when infeasible; otherwise all
    /// artificials end up nonbasic at zero (or their rows dropped).
    pub(crate) fn phase1(&mut self) -> Result<Option<FarkasCertificate>> {
        let nv = self.nvars();
        if self.artificial_sum() > 0.0 {
            let mut cost = vec![0.0; nv];
            for c in cost.iter_mut().skip(self.n + self.m) {
                *c = 1.0;
            }
            self.optimize(&cost)?;
            let bnorm = self.lp.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if self.artificial_sum() > FEAS_TOL * (1.0 + bnorm) {
                let yl = self.duals(&cost)?;
                let mut y = vec![0.0; self.m];
                for (p, &i) in self.rows.iter().enumerate() {
                    y[i] = yl[p];
                }
                return Ok(Some(FarkasCertificate { y }));
            }
        }
        for i in 0..self.m {
            let v = self.n + self.m + i;
            self.hi[v] = 0.0;
            if self.in_basis[v].is_none() {
                self.x[v] = 0.0;
            }
        }
        self.drive_out_artificials()?;
        Ok(None)
    }

    fn drive_out_artificials(&mut self) -> Result<()> {
        loop {
            let Some(pos) = self.basis.iter().position(|&v| self.is_artificial(v)) else {
                return Ok(());
            };
            let art = self.basis[pos];
            let k = self.rows.len();
            let mut e = vec![0.0; k];
            e[pos] = 1.0;
            let rho = self.fact.solve_transpose(&e)?;
            let rnorm = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = PIVOT_TOL * rnorm.max(1.0);
            let mut pick = None;
            for v in 0..self.n {
                if self.in_basis[v].is_none() && self.column(v).dot_dense(&rho).abs() > tol {
                    pick = Some(v);
                    break;
                }
            }
            if pick.is_none() {
                for &i in &self.rows {
                    let v = self.n + i;
                    if self.in_basis[v].is_none()
                        && self.lo[v] < self.hi[v]
                        && rho[self.row_pos[i]].abs() > tol
                    {
                        pick = Some(v);
                        break;
                    }
                }
            }
            match pick {
                Some(v) => {
                    let col = self.column(v);
                    self.fact
                        .replace_column(pos, col)
                        .map_err(|err| Error::NumericalFailure(format!("artificial drive-out failed ({err})")))?;
                    self.basis[pos] = v;
                    self.in_basis[v] = Some(pos);
                    self.in_basis[art] = None;
                    self.x[art] = 0.0;
                    self.recompute()?;
                }
                None => {
                    let row = art - self.n - self.m;
                    log::debug!("dropping redundant row {row}");
                    self.drop_row(row, pos)?;
                }
            }
        }
    }

    fn drop_row(&mut self, row: usize, pos: usize) -> Result<()> {
        let art = self.basis.remove(pos);
        self.in_basis[art] = None;
        self.x[art] = 0.0;
        // slack of a dropped row is fixed at its implied value
        let slack = self.n + row;
        let ax: f64 = (0..self.n).map(|j| self.lp.a.get(row, j) * self.x[j]).sum();
        self.x[slack] = ax - self.lp.b[row];
        self.lo[slack] = self.x[slack];
        self.hi[slack] = self.x[slack];
        self.dropped.push(row);
        self.rows.retain(|&i| i != row);
        self.row_pos = vec![usize::MAX; self.m];
        for (p, &i) in self.rows.iter().enumerate() {
            self.row_pos[i] = p;
        }
        for (p, &v) in self.basis.iter().enumerate() {
            self.in_basis[v] = Some(p);
        }
        self.refactor()?;
        self.recompute()
    }

    pub(crate) fn live_rows(&self) -> &[usize] {
        &self.rows
    }
}

fn nonbasic_start(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn small_lp_optimum() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0 → (1.6, 1.2)
        let lp = LpProblem::ranged(
            dense(&[&[1.0, 2.0], &[3.0, 1.0]]),
            vec![-INF, -INF],
            vec![4.0, 6.0],
            vec![0.0, 0.0],
            vec![INF, INF],
            vec![-1.0, -1.0],
        );
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 1.6).abs() < 1e-12 && (r.x[1] - 1.2).abs() < 1e-12);
        assert!((r.objective + 2.8).abs() < 1e-12);
    }

    #[test]
    fn infeasible_has_certificate() {
        // z ≤ -1, z ≥ 0
        let lp = LpProblem::ranged(dense(&[&[1.0]]), vec![-INF], vec![-1.0], vec![0.0], vec![INF], vec![0.0]);
        let r = solve_lp(&lp).unwrap();
        match r.status {
            LpStatus::Infeasible(cert) => assert!(cert.verify_lp(&lp)),
            s => panic!("expected infeasible, got {s:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let lp = LpProblem::ranged(dense(&[&[1.0, -1.0]]), vec![0.0], vec![INF], vec![0.0, 0.0], vec![INF, INF], vec![0.0, -1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equality_rows_are_dropped() {
        // x + y = 1 twice, 2x + 2y = 2
        let a = dense(&[&[1.0, 1.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let lp = LpProblem::ranged(a, vec![1.0, 1.0, 2.0], vec![1.0, 1.0, 2.0], vec![0.0, 0.0], vec![INF, INF], vec![1.0, 0.0]);
        let mut sx = Simplex::new(&lp).unwrap();
        assert!(sx.phase1().unwrap().is_none());
        assert_eq!(sx.dropped.len(), 2);
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0]).abs() < 1e-12 && (r.x[1] - 1.0).abs() < 1e-12);
    }
}
