//! Complementary pivoting along the path started at the ray.
//!
//! Every variable of the system carries box bounds. Nonbasic variables sit
//! at one of their bounds (`z` at `l` or `u`, `t` at its current value while
//! it is still nonbasic, everything else at zero). The entering column is
//! always the complement of the variable that just left.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::BasisFactorization;
use crate::problem::{eliminate_fixed, kkt_residual, validate, AviProblem, ConeRowKind, KktResidual, Solution};
use crate::ray_start::{ray_start, RayStartData};
use crate::simplex::{solve_lp, LpProblem, LpStatus};
use crate::sparse::{SparseMatrix, SparseVector};
use crate::system::{bounds, SystemLayout, Var};

/// Basic values above this magnitude abort the solve.
pub const MULTIPLIER_CAP: f64 = 1e12;
/// Rays with `|Δt|` above this are evidence against semimonotonicity.
pub const RAY_DT_TOL: f64 = 1e-10;

const ZERO_PIVOT: f64 = 1e-11;
const TIE_TOL: f64 = 1e-9;
const START_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative KKT tolerance, scaled by `1 + ‖q‖∞`.
    pub tol: f64,
    pub iter_limit: usize,
    pub time_limit: Duration,
    /// Treat `M` as an L-matrix with respect to `rec C` when a ray has to be
    /// interpreted and the LP check is unavailable.
    pub assume_l_matrix: bool,
    pub log_pivots: bool,
    pub record_path: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            iter_limit: 100_000,
            time_limit: Duration::from_secs(3600),
            assume_l_matrix: false,
            log_pivots: false,
            record_path: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    RayTermination,
    IterLimit,
    TimeLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn token(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::RayTermination => "ray",
            SolveStatus::IterLimit => "iter_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// One pivot of the path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub iteration: usize,
    pub entering: Var,
    /// `None` when the entering variable moved to its own opposite bound.
    pub leaving: Option<Var>,
    pub t: f64,
    /// Sorted basic ids after the pivot.
    pub signature: Vec<usize>,
}

/// Ray-start quantities kept for reporting.
#[derive(Debug, Clone, Default)]
pub struct StartSummary {
    pub t0: f64,
    pub r: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub lineality_dim: usize,
    /// Basis of `lin C` in the coordinates of the solved problem.
    pub lineality: Vec<Vec<f64>>,
    pub lineality_stationarity: f64,
    pub lineality_r: f64,
    pub basis: Vec<String>,
    pub degenerate: bool,
}

/// Direction of an unbounded edge of the path, normalized to max-abs 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCertificate {
    pub dz: Vec<f64>,
    pub dlambda: Vec<f64>,
    pub dw: Vec<f64>,
    pub dv: Vec<f64>,
    pub ds: Vec<f64>,
    pub dt: f64,
}

/// Residuals of the ray conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RayChecks {
    /// Distance of `Δz` from `rec C` (bounds and cone rows).
    pub recession: f64,
    /// `‖MΔz - AᵀΔλ - Δw + Δv‖∞`.
    pub dual_residual: f64,
    /// Sign violations of `Δλ ∈ K^D`, `Δw ≥ 0`, `Δv ≥ 0`.
    pub dual_cone: f64,
    /// `ΔzᵀMΔz`.
    pub curvature: f64,
    pub dt: f64,
}

impl RayChecks {
    pub fn hold(&self, tol: f64) -> bool {
        self.recession <= tol && self.dual_residual <= tol && self.dual_cone <= tol && self.curvature.abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibilityBasis {
    /// An LP shows `Mz + q ∈ (rec C)^D` has no solution.
    Lp,
    /// The caller declared the L-matrix property.
    Declared,
    /// `M + Mᵀ` is positive semidefinite and `M` is invertible on `lin C`.
    Psd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityReport {
    pub basis: InfeasibilityBasis,
    pub dz: Vec<f64>,
    pub checks: RayChecks,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RayInterpretation {
    Infeasible(InfeasibilityReport),
    Unresolved {
        dz: Vec<f64>,
        checks: RayChecks,
        /// `|Δt|` exceeded [`RAY_DT_TOL`].
        semimonotone_violation: bool,
        /// The LP found a point with `Mz + q ∈ (rec C)^D`.
        dual_system_solvable: bool,
    },
}

impl RayInterpretation {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, RayInterpretation::Infeasible(_))
    }

    pub fn checks(&self) -> &RayChecks {
        match self {
            RayInterpretation::Infeasible(r) => &r.checks,
            RayInterpretation::Unresolved { checks, .. } => checks,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present for `Solved`, and for limits as the last path point.
    pub solution: Option<Solution>,
    pub residual: Option<KktResidual>,
    pub iterations: usize,
    pub t: f64,
    pub certificate: Option<RayCertificate>,
    pub interpretation: Option<RayInterpretation>,
    pub start: StartSummary,
    /// Largest relative row residual of the system seen along the path.
    pub path_residual: f64,
    pub path: Vec<PathPoint>,
    pub message: Option<String>,
    pub elapsed: Duration,
}

impl SolveResult {
    fn empty(status: SolveStatus) -> Self {
        Self {
            status,
            solution: None,
            residual: None,
            iterations: 0,
            t: 0.0,
            certificate: None,
            interpretation: None,
            start: StartSummary::default(),
            path_residual: 0.0,
            path: Vec::new(),
            message: None,
            elapsed: Duration::ZERO,
        }
    }
}

/// Outcome of one pivot.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue,
    SolvedAtTZero,
    SecondaryRay(RayCertificate),
}

/// Outcome of the ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    /// Basic variable at `pos` blocks at its upper (`true`) or lower bound.
    Leave { pos: usize, at_upper: bool, theta: f64 },
    /// The entering variable reaches its own opposite bound first.
    OwnBound { theta: f64 },
    Unblocked,
}

/// A blocking candidate: primary ratio and lexicographic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub theta: f64,
    pub lex: Vec<f64>,
    /// The auxiliary variable wins primary ties.
    pub preferred: bool,
}

/// Index of the lexicographically smallest candidate among those whose
/// primary ratio ties the minimum.
pub fn lex_min(cands: &[Candidate]) -> Option<usize> {
    let best = cands.iter().map(|c| c.theta).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let tied: Vec<usize> = (0..cands.len())
        .filter(|&k| cands[k].theta <= best + TIE_TOL * (1.0 + best))
        .collect();
    if let Some(&k) = tied.iter().find(|&&k| cands[k].preferred) {
        return Some(k);
    }
    let mut pick = tied[0];
    for &k in &tied[1..] {
        if lex_less(&cands[k].lex, &cands[pick].lex) {
            pick = k;
        }
    }
    Some(pick)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    let len = a.len().max(b.len());
    for i in 0..len {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        if (x - y).abs() > 1e-13 * (1.0 + x.abs().max(y.abs())) {
            return x < y;
        }
    }
    false
}

/// The almost-complementary basis and everything needed to pivot it.
///
/// The lexicographic right-hand side is `B⁻¹·B0·diag(σ)`, with `B0` the
/// start basis and `σ` pushing each start value into its interior; its
/// rows are formed on demand for tied candidates only.
#[derive(Debug, Clone)]
pub struct PivotState {
    pub layout: SystemLayout,
    pub r: Vec<f64>,
    pub basis: Vec<Var>,
    /// Position in `basis` by flat id, `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    /// Value of each nonbasic variable by flat id.
    nonbasic: Vec<f64>,
    /// Basic values by position.
    pub x: Vec<f64>,
    pub entering: Var,
    pub direction: f64,
    pub iteration: usize,
    fact: BasisFactorization,
    b0: Vec<SparseVector>,
    sigma: Vec<f64>,
    rhs: Vec<f64>,
    z_cols: Vec<SparseVector>,
    t_col: SparseVector,
    pub path_residual: f64,
}

impl PivotState {
    /// Start basis with `t` nonbasic just above `t0`, about to decrease.
    pub fn new(p: &AviProblem, start: &RayStartData) -> Result<Self> {
        let layout = SystemLayout::new(p, &start.state.dropped_rows);
        let basis = start.vars.clone();
        let cols: Vec<SparseVector> = basis.iter().map(|&v| layout.column(p, v, &start.r)).collect();
        let fact = BasisFactorization::new(layout.dim(), cols.clone())?;
        let mut pos = vec![usize::MAX; layout.nvars()];
        for (k, &v) in basis.iter().enumerate() {
            pos[layout.id(v)] = k;
        }
        let mut nonbasic = vec![0.0; layout.nvars()];
        for j in 0..p.n() {
            nonbasic[j] = start.z_bar[j];
        }
        let t_start = start.t0 + START_OFFSET * (1.0 + start.t0);
        nonbasic[layout.id(Var::T)] = t_start;
        let x: Vec<f64> = start.beta0.iter().zip(&start.beta_r).map(|(a, b)| a + t_start * b).collect();
        let sigma = basis
            .iter()
            .zip(&x)
            .map(|(&v, &xv)| {
                let (lo, hi) = bounds(p, v);
                if lo.is_finite() && (hi.is_infinite() || xv - lo <= hi - xv) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let z_cols = (0..p.n()).map(|j| layout.column(p, Var::Z(j), &start.r)).collect();
        let t_col = layout.column(p, Var::T, &start.r);
        let rhs = layout.rhs(p);
        let mut st = Self {
            layout,
            r: start.r.clone(),
            basis,
            pos,
            nonbasic,
            x,
            entering: Var::T,
            direction: -1.0,
            iteration: 0,
            fact,
            b0: cols,
            sigma,
            rhs,
            z_cols,
            t_col,
            path_residual: 0.0,
        };
        st.recompute()?;
        Ok(st)
    }

    pub fn is_basic(&self, v: Var) -> bool {
        self.pos[self.layout.id(v)] != usize::MAX
    }

    /// Current value of any variable.
    pub fn value(&self, v: Var) -> f64 {
        let id = self.layout.id(v);
        match self.pos[id] {
            usize::MAX => self.nonbasic[id],
            k => self.x[k],
        }
    }

    pub fn t(&self) -> f64 {
        self.value(Var::T)
    }

    fn column(&self, p: &AviProblem, v: Var) -> SparseVector {
        match v {
            Var::Z(j) => self.z_cols[j].clone(),
            Var::T => self.t_col.clone(),
            _ => self.layout.column(p, v, &self.r),
        }
    }

    /// Basic values from scratch: `B x = rhs - N x_N`.
    fn recompute(&mut self) -> Result<()> {
        let mut rhs = self.rhs.clone();
        let n = self.layout.n;
        for j in 0..n {
            if self.pos[j] == usize::MAX && self.nonbasic[j] != 0.0 {
                for (i, a) in self.z_cols[j].iter() {
                    rhs[i] -= a * self.nonbasic[j];
                }
            }
        }
        let tid = self.layout.id(Var::T);
        if self.pos[tid] == usize::MAX && self.nonbasic[tid] != 0.0 {
            for (i, a) in self.t_col.iter() {
                rhs[i] -= a * self.nonbasic[tid];
            }
        }
        self.x = self.fact.solve_forward(&rhs)?;
        let bx = self.fact.mul(&self.x);
        let scale = 1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let res = bx.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        self.path_residual = self.path_residual.max(res);
        let big = self.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !big.is_finite() || big > MULTIPLIER_CAP {
            return Err(Error::NumericalFailure(format!("basic value magnitude {big:e} exceeds cap")));
        }
        Ok(())
    }

    /// Sorted flat ids of the basic variables.
    pub fn signature(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.basis.iter().map(|&v| self.layout.id(v)).collect();
        s.sort_unstable();
        s
    }

    /// `(missing, doubled)`: complementary groups with no basic member and
    /// with more than one.
    pub fn complementarity_defect(&self) -> (usize, usize) {
        let (mut missing, mut doubled) = (0, 0);
        let mut tally = |c: usize| match c {
            0 => missing += 1,
            1 => {}
            _ => doubled += 1,
        };
        for j in 0..self.layout.n {
            let c = [Var::Z(j), Var::W(j), Var::V(j)].iter().filter(|&&v| self.is_basic(v)).count();
            tally(c);
        }
        for &i in &self.layout.rows {
            let c = [Var::Lam(i), Var::S(i)].iter().filter(|&&v| self.is_basic(v)).count();
            tally(c);
        }
        (missing, doubled)
    }

    /// Largest bound violation over the basic variables.
    pub fn feasibility_violation(&self, p: &AviProblem) -> f64 {
        self.basis
            .iter()
            .zip(&self.x)
            .map(|(&v, &x)| {
                let (lo, hi) = bounds(p, v);
                (lo - x).max(x - hi).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn lex_row(&mut self, pos: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.x.len()];
        e[pos] = 1.0;
        let rho = self.fact.solve_transpose(&e)?;
        Ok(self.b0.iter().zip(&self.sigma).map(|(c, s)| s * c.dot_dense(&rho)).collect())
    }

    /// Solution point read off the basis (meaningful when `t = 0`).
    pub fn solution(&self, p: &AviProblem) -> Solution {
        let (n, m) = (p.n(), p.m());
        let z: Vec<f64> = (0..n).map(|j| self.value(Var::Z(j))).collect();
        let mut lambda = vec![0.0; m];
        for &i in &self.layout.rows {
            lambda[i] = self.value(Var::Lam(i));
        }
        let mut s = p.a.mul_vec(&z);
        for (si, bi) in s.iter_mut().zip(&p.b) {
            *si -= bi;
        }
        Solution {
            w: (0..n).map(|j| self.value(Var::W(j))).collect(),
            v: (0..n).map(|j| self.value(Var::V(j))).collect(),
            z,
            lambda,
            s,
        }
    }
}

/// Minimum-ratio test for `entering` moving in `dir`, with `alpha` the
/// entering column solved against the basis.
pub fn lex_ratio_test(st: &mut PivotState, p: &AviProblem, entering: Var, dir: f64, alpha: &[f64]) -> Result<Ratio> {
    let amax = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let zero = ZERO_PIVOT * amax.max(1.0);
    let mut cands = Vec::new();
    let mut kinds = Vec::new();
    for (k, &a) in alpha.iter().enumerate() {
        if a.abs() <= zero {
            continue;
        }
        let rate = -dir * a;
        let var = st.basis[k];
        let (lo, hi) = bounds(p, var);
        let xk = st.x[k];
        let (gap, upper) = if rate < 0.0 && lo.is_finite() {
            ((xk - lo).max(0.0), false)
        } else if rate > 0.0 && hi.is_finite() {
            ((hi - xk).max(0.0), true)
        } else {
            continue;
        };
        cands.push(Candidate {
            theta: gap / rate.abs(),
            lex: Vec::new(),
            preferred: var == Var::T,
        });
        kinds.push(Some((k, upper, rate.abs())));
    }
    let (lo, hi) = bounds(p, entering);
    if entering == Var::T || (lo.is_finite() && hi.is_finite()) {
        cands.push(Candidate {
            theta: if entering == Var::T { st.value(entering) } else { hi - lo },
            lex: Vec::new(),
            preferred: entering == Var::T,
        });
        kinds.push(None);
    }
    let best = cands.iter().map(|c| c.theta).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Ok(Ratio::Unblocked);
    }
    let cut = best + TIE_TOL * (1.0 + best);
    let tied = cands.iter().filter(|c| c.theta <= cut).count();
    if tied > 1 {
        for (c, kind) in cands.iter_mut().zip(&kinds) {
            if c.theta > cut {
                continue;
            }
            c.lex = match *kind {
                Some((k, upper, rate)) => {
                    let row = st.lex_row(k)?;
                    let sgn = if upper { -1.0 } else { 1.0 };
                    row.iter().map(|v| sgn * v / rate).collect()
                }
                None => vec![0.0; st.x.len()],
            };
        }
    }
    let pick = lex_min(&cands).expect("finite minimum");
    let theta = cands[pick].theta;
    Ok(match kinds[pick] {
        Some((pos, at_upper, _)) => Ratio::Leave { pos, at_upper, theta },
        None => Ratio::OwnBound { theta },
    })
}

/// Complement of a variable that just left at the given bound, with the
/// direction it has to move in.
fn complement(p: &AviProblem, left: Var, at_upper: bool) -> (Var, f64) {
    let cone = |i: usize| match p.kinds[i] {
        ConeRowKind::Le => -1.0,
        _ => 1.0,
    };
    match left {
        Var::Z(j) if at_upper => (Var::V(j), 1.0),
        Var::Z(j) => (Var::W(j), 1.0),
        Var::W(j) => (Var::Z(j), 1.0),
        Var::V(j) => (Var::Z(j), -1.0),
        Var::Lam(i) => (Var::S(i), cone(i)),
        Var::S(i) => (Var::Lam(i), cone(i)),
        Var::T => (Var::T, 0.0),
    }
}

/// One entering solve, ratio test and basis exchange.
pub fn pivot_step(st: &mut PivotState, p: &AviProblem) -> Result<(StepOutcome, Option<Var>)> {
    let e = st.entering;
    let dir = st.direction;
    let col = st.column(p, e);
    let alpha = st.fact.solve_forward_sparse(&col)?;
    let ratio = lex_ratio_test(st, p, e, dir, &alpha)?;
    st.iteration += 1;
    let eid = st.layout.id(e);
    match ratio {
        Ratio::Unblocked => {
            let mut d = vec![0.0; st.layout.nvars()];
            d[eid] = dir;
            for (k, &a) in alpha.iter().enumerate() {
                d[st.layout.id(st.basis[k])] = -dir * a;
            }
            Ok((StepOutcome::SecondaryRay(direction_certificate(st, p, &d)), None))
        }
        Ratio::OwnBound { theta } => {
            st.nonbasic[eid] += dir * theta;
            if e == Var::T {
                st.nonbasic[eid] = 0.0;
                st.recompute()?;
                return Ok((StepOutcome::SolvedAtTZero, None));
            }
            let (lo, hi) = bounds(p, e);
            let at_upper = dir > 0.0;
            st.nonbasic[eid] = if at_upper { hi } else { lo };
            st.recompute()?;
            let (next, nd) = complement(p, e, at_upper);
            st.entering = next;
            st.direction = nd;
            Ok((StepOutcome::Continue, None))
        }
        Ratio::Leave { pos, at_upper, .. } => {
            let left = st.basis[pos];
            let (lo, hi) = bounds(p, left);
            let lid = st.layout.id(left);
            st.fact.replace_column(pos, col)?;
            st.basis[pos] = e;
            st.pos[eid] = pos;
            st.pos[lid] = usize::MAX;
            st.nonbasic[lid] = if at_upper { hi } else { lo };
            st.recompute()?;
            if left == Var::T {
                return Ok((StepOutcome::SolvedAtTZero, Some(left)));
            }
            let (next, nd) = complement(p, left, at_upper);
            st.entering = next;
            st.direction = nd;
            Ok((StepOutcome::Continue, Some(left)))
        }
    }
}

fn direction_certificate(st: &PivotState, p: &AviProblem, d: &[f64]) -> RayCertificate {
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let lay = &st.layout;
    let get = |v: Var| d[lay.id(v)] / scale;
    let (n, m) = (p.n(), p.m());
    let dz: Vec<f64> = (0..n).map(|j| get(Var::Z(j))).collect();
    let mut dlambda = vec![0.0; m];
    for &i in &lay.rows {
        dlambda[i] = get(Var::Lam(i));
    }
    RayCertificate {
        ds: p.a.mul_vec(&dz),
        dw: (0..n).map(|j| get(Var::W(j))).collect(),
        dv: (0..n).map(|j| get(Var::V(j))).collect(),
        dz,
        dlambda,
        dt: get(Var::T),
    }
}

/// Residuals of `Δz ∈ rec C`, `MΔz = AᵀΔλ + Δw - Δv` with the multiplier
/// signs of `(rec C)^D`, and `ΔzᵀMΔz = 0`.
pub fn ray_checks(p: &AviProblem, c: &RayCertificate) -> RayChecks {
    let n = p.n();
    let mut out = RayChecks {
        dt: c.dt,
        ..Default::default()
    };
    let adz = p.a.mul_vec(&c.dz);
    for i in 0..p.m() {
        out.recession = out.recession.max(p.kinds[i].violation(adz[i]));
        out.dual_cone = out.dual_cone.max(p.kinds[i].dual_violation(c.dlambda[i]));
    }
    for j in 0..n {
        if p.l[j].is_finite() {
            out.recession = out.recession.max(-c.dz[j]);
        } else {
            out.dual_cone = out.dual_cone.max(c.dw[j].abs());
        }
        if p.u[j].is_finite() {
            out.recession = out.recession.max(c.dz[j]);
        } else {
            out.dual_cone = out.dual_cone.max(c.dv[j].abs());
        }
        out.dual_cone = out.dual_cone.max(-c.dw[j]).max(-c.dv[j]);
    }
    let mdz = p.m_mat.mul_vec(&c.dz);
    let atl = p.a.tr_mul_vec(&c.dlambda);
    for j in 0..n {
        let r = mdz[j] - atl[j] - c.dw[j] + c.dv[j];
        out.dual_residual = out.dual_residual.max(r.abs());
    }
    out.curvature = c.dz.iter().zip(&mdz).map(|(a, b)| a * b).sum();
    out
}

/// LP feasibility of `Mz + q = Aᵀμ + ω_l - ω_u` with `μ ∈ K^D` and
/// `ω ≥ 0` on the finite bounds. `Some(true)` when solvable.
pub fn dual_system_solvable(p: &AviProblem) -> Result<Option<bool>> {
    let (n, m) = (p.n(), p.m());
    let lower: Vec<usize> = (0..n).filter(|&j| p.l[j].is_finite()).collect();
    let upper: Vec<usize> = (0..n).filter(|&j| p.u[j].is_finite()).collect();
    let nv = n + m + lower.len() + upper.len();
    let mut trip: Vec<(usize, usize, f64)> = p.m_mat.triplets().collect();
    for (i, j, a) in p.a.triplets() {
        trip.push((j, n + i, -a));
    }
    for (k, &j) in lower.iter().enumerate() {
        trip.push((j, n + m + k, -1.0));
    }
    for (k, &j) in upper.iter().enumerate() {
        trip.push((j, n + m + lower.len() + k, 1.0));
    }
    let a = SparseMatrix::from_triplets(n, nv, &trip)?;
    let mut l = vec![f64::NEG_INFINITY; nv];
    let mut u = vec![f64::INFINITY; nv];
    for i in 0..m {
        match p.kinds[i] {
            ConeRowKind::Ge => l[n + i] = 0.0,
            ConeRowKind::Le => u[n + i] = 0.0,
            ConeRowKind::Eq => {}
        }
    }
    for l_k in l.iter_mut().skip(n + m) {
        *l_k = 0.0;
    }
    let rhs: Vec<f64> = p.q.iter().map(|x| -x).collect();
    let lp = LpProblem::ranged(a, rhs.clone(), rhs, l, u, vec![0.0; nv]);
    match solve_lp(&lp) {
        Ok(res) => Ok(match res.status {
            LpStatus::Optimal => Some(true),
            LpStatus::Infeasible(_) => Some(false),
            LpStatus::Unbounded => Some(true),
        }),
        Err(Error::NumericalFailure(_)) | Err(Error::SingularBasis(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn psd_and_invertible_on_lineality(p: &AviProblem, lineality: &[Vec<f64>]) -> bool {
    let m = p.m_mat.to_nalgebra();
    let sym = &m + m.transpose();
    let eig = sym.symmetric_eigenvalues();
    let scale = eig.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    if eig.iter().any(|&x| x < -1e-10 * scale) {
        return false;
    }
    if lineality.is_empty() {
        return true;
    }
    let k = lineality.len();
    let v = nalgebra::DMatrix::from_fn(p.n(), k, |i, j| lineality[j][i]);
    let mqq = v.transpose() * &m * &v;
    let sv = mqq.singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &x| a.max(x));
    sv.iter().all(|&x| x > 1e-10 * smax.max(1.0))
}

/// Classifies a secondary ray.
///
/// The LP check decides whenever it runs; the declared L-matrix property
/// and the PSD test are used only when it fails numerically.
pub fn interpret_ray(p: &AviProblem, cert: &RayCertificate, assume_l_matrix: bool, lineality: &[Vec<f64>]) -> Result<RayInterpretation> {
    let checks = ray_checks(p, cert);
    let solvable = dual_system_solvable(p)?;
    let fallback = if assume_l_matrix {
        Some(InfeasibilityBasis::Declared)
    } else if psd_and_invertible_on_lineality(p, lineality) {
        Some(InfeasibilityBasis::Psd)
    } else {
        None
    };
    let basis = match solvable {
        Some(false) => Some(InfeasibilityBasis::Lp),
        Some(true) => None,
        None => fallback,
    };
    Ok(match basis {
        Some(basis) => RayInterpretation::Infeasible(InfeasibilityReport {
            basis,
            dz: cert.dz.clone(),
            checks,
        }),
        None => RayInterpretation::Unresolved {
            dz: cert.dz.clone(),
            checks,
            semimonotone_violation: cert.dt.abs() > RAY_DT_TOL,
            dual_system_solvable: solvable == Some(true),
        },
    })
}

fn q_norm(p: &AviProblem) -> f64 {
    p.q.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `AVI(C, q, M)` by complementary pivoting from a ray start.
///
/// Returns `Err` for an invalid problem, an empty feasible set, and when
/// `M` is singular on the lineality space of `C`.
pub fn lemke_solve(p: &AviProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let clock = Instant::now();
    let issues = validate(p);
    if !issues.is_empty() {
        let msg: Vec<String> = issues.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidProblem(msg.join("; ")));
    }
    let (rp, elim) = eliminate_fixed(p)?;
    let mut out = if rp.n() == 0 {
        let mut res = SolveResult::empty(SolveStatus::Solved);
        res.solution = Some(Solution {
            z: Vec::new(),
            lambda: vec![0.0; rp.m()],
            w: Vec::new(),
            v: Vec::new(),
            s: rp.b.iter().map(|b| -b).collect(),
        });
        res
    } else {
        match ray_start(&rp) {
            Ok(start) => run_path(&rp, &start, opts, clock)?,
            Err(e @ (Error::NumericalFailure(_) | Error::SingularBasis(_))) => {
                let mut res = SolveResult::empty(SolveStatus::NumericalFailure);
                res.message = Some(format!("start failed: {e}"));
                res
            }
            Err(e) => return Err(e),
        }
    };

    if let Some(sol) = out.solution.take() {
        let full = elim.restore(p, &sol);
        let res = kkt_residual(p, &full)?;
        if out.status == SolveStatus::Solved && !res.within(opts.tol, q_norm(p)) {
            out.status = SolveStatus::NumericalFailure;
            out.message = Some(format!("final residual {:e} above tolerance", res.max()));
        }
        out.residual = Some(res);
        out.solution = Some(full);
    }
    if let Some(c) = out.certificate.take() {
        let full = RayCertificate {
            dz: elim.restore_direction(&c.dz),
            dlambda: elim.restore_rows(p.m(), &c.dlambda),
            dw: elim.restore_direction(&c.dw),
            dv: elim.restore_direction(&c.dv),
            ds: Vec::new(),
            dt: c.dt,
        };
        let full = RayCertificate {
            ds: p.a.mul_vec(&full.dz),
            ..full
        };
        let lin: Vec<Vec<f64>> = out.start.lineality.iter().map(|v| elim.restore_direction(v)).collect();
        out.interpretation = Some(interpret_ray(p, &full, opts.assume_l_matrix, &lin)?);
        out.certificate = Some(full);
    }
    if !elim.is_trivial() && !out.start.z_bar.is_empty() {
        let mut z = elim.restore_direction(&out.start.z_bar);
        for &(j, v) in elim.fixed() {
            z[j] = v;
        }
        out.start.z_bar = z;
        out.start.r = elim.restore_direction(&out.start.r);
        out.start.lineality = out.start.lineality.iter().map(|v| elim.restore_direction(v)).collect();
    }
    out.elapsed = clock.elapsed();
    Ok(out)
}

fn summary(p: &AviProblem, start: &RayStartData) -> StartSummary {
    StartSummary {
        t0: start.t0,
        r: start.r.clone(),
        z_bar: start.z_bar.clone(),
        lineality_dim: start.lineality.dim(),
        lineality: start.lineality.vectors.clone(),
        lineality_stationarity: start.lineality_stationarity(p),
        lineality_r: start.lineality_r(),
        basis: start.vars.iter().map(|v| v.to_string()).collect(),
        degenerate: start.degenerate,
    }
}

fn run_path(p: &AviProblem, start: &RayStartData, opts: &SolveOptions, clock: Instant) -> Result<SolveResult> {
    let mut res = SolveResult::empty(SolveStatus::Solved);
    res.start = summary(p, start);

    if start.degenerate {
        let mut sol = Solution {
            z: start.z_bar.clone(),
            lambda: start.lambda0.clone(),
            w: start.w0.clone(),
            v: start.v0.clone(),
            s: start.s0.clone(),
        };
        let az = p.a.mul_vec(&sol.z);
        for i in 0..p.m() {
            sol.s[i] = az[i] - p.b[i];
        }
        res.solution = Some(sol);
        return Ok(res);
    }

    let mut st = match PivotState::new(p, start) {
        Ok(st) => st,
        Err(e @ (Error::NumericalFailure(_) | Error::SingularBasis(_))) => {
            res.status = SolveStatus::NumericalFailure;
            res.message = Some(e.to_string());
            return Ok(res);
        }
        Err(e) => return Err(e),
    };

    loop {
        if st.iteration >= opts.iter_limit {
            res.status = SolveStatus::IterLimit;
            break;
        }
        if clock.elapsed() > opts.time_limit {
            res.status = SolveStatus::TimeLimit;
            break;
        }
        let entering = st.entering;
        let step = pivot_step(&mut st, p);
        let (outcome, leaving) = match step {
            Ok(x) => x,
            Err(e @ (Error::NumericalFailure(_) | Error::SingularBasis(_))) => {
                res.status = SolveStatus::NumericalFailure;
                res.message = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let t = st.t();
        if opts.log_pivots {
            log::info!(
                "pivot {:>6} enter {:<10} leave {:<10} t {:.6e}",
                st.iteration,
                entering.to_string(),
                leaving.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                t
            );
        }
        if opts.record_path {
            res.path.push(PathPoint {
                iteration: st.iteration,
                entering,
                leaving,
                t,
                signature: st.signature(),
            });
        }
        match outcome {
            StepOutcome::Continue => {}
            StepOutcome::SolvedAtTZero => {
                res.status = SolveStatus::Solved;
                break;
            }
            StepOutcome::SecondaryRay(cert) => {
                res.status = SolveStatus::RayTermination;
                res.certificate = Some(cert);
                break;
            }
        }
    }
    res.iterations = st.iteration;
    res.t = st.t();
    res.path_residual = st.path_residual;
    if res.status != SolveStatus::RayTermination {
        res.solution = Some(st.solution(p));
    }
    if matches!(res.status, SolveStatus::IterLimit | SolveStatus::TimeLimit) {
        res.message = Some(format!("stopped at t = {:e}", res.t));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn solve(p: &AviProblem) -> SolveResult {
        let opts = SolveOptions {
            record_path: true,
            ..Default::default()
        };
        lemke_solve(p, &opts).unwrap()
    }

    #[test]
    fn identity_lcp() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
        let res = solve(&p);
        assert_eq!(res.status, SolveStatus::Solved);
        let z = &res.solution.as_ref().unwrap().z;
        assert!((z[0] - 1.0).abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12);
        assert!(res.iterations <= 3, "{} pivots", res.iterations);
        // a w leaves first, then its partner z enters
        let first = &res.path[0];
        assert_eq!(first.entering, Var::T);
        let Some(Var::W(j)) = first.leaving else { panic!("{:?}", first.leaving) };
        assert_eq!(res.path[1].entering, Var::Z(j));
    }

    #[test]
    fn zero_matrix_ray_is_infeasible() {
        let p = AviProblem::lcp(SparseMatrix::zeros(1, 1), vec![-1.0]).unwrap();
        let res = solve(&p);
        assert_eq!(res.status, SolveStatus::RayTermination);
        let c = res.certificate.unwrap();
        assert_eq!(c.dz, vec![1.0]);
        assert_eq!(c.dt, 0.0);
        let interp = res.interpretation.unwrap();
        assert!(interp.is_infeasible());
        assert!(interp.checks().hold(1e-12));
    }

    #[test]
    fn indefinite_on_segment() {
        let p = AviProblem::new(
            dense(&[&[1.0, 0.0], &[0.0, -1.0]]),
            vec![0.0; 2],
            dense(&[&[1.0, 1.0]]),
            vec![1.0],
            vec![ConeRowKind::Eq],
            vec![0.0; 2],
            vec![f64::INFINITY; 2],
        )
        .unwrap();
        let res = solve(&p);
        assert_eq!(res.status, SolveStatus::Solved);
        let z = &res.solution.unwrap().z;
        assert!(z[0].abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12, "{z:?}");
    }

    #[test]
    fn nonnegative_q_solves_at_start() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![1.0, 2.0]).unwrap();
        let res = solve(&p);
        assert_eq!(res.status, SolveStatus::Solved, "{:?} {:?}", res.message, res.solution);
        assert_eq!(res.solution.unwrap().z, vec![0.0, 0.0]);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn lex_min_breaks_primary_ties() {
        let c = |theta: f64, lex: &[f64]| Candidate {
            theta,
            lex: lex.to_vec(),
            preferred: false,
        };
        assert_eq!(lex_min(&[c(1.0, &[1.0, 0.0]), c(1.0, &[0.5, 3.0])]), Some(1));
        assert_eq!(lex_min(&[c(1.0, &[0.5, 0.0]), c(1.0, &[0.5, -1.0])]), Some(1));
        assert_eq!(lex_min(&[c(2.0, &[]), c(1.0, &[9.0])]), Some(1));
        assert_eq!(lex_min(&[]), None);
        let mut t = c(1.0, &[5.0]);
        t.preferred = true;
        assert_eq!(lex_min(&[c(1.0, &[0.0]), t]), Some(1));
    }

    #[test]
    fn unblocked_column() {
        let p = AviProblem::lcp(SparseMatrix::zeros(1, 1), vec![-1.0]).unwrap();
        let start = ray_start(&p).unwrap();
        let mut st = PivotState::new(&p, &start).unwrap();
        let (out, left) = pivot_step(&mut st, &p).unwrap();
        assert_eq!(out, StepOutcome::Continue);
        assert_eq!(left, Some(Var::W(0)));
        assert_eq!(st.entering, Var::Z(0));
        let alpha = vec![0.0];
        assert_eq!(lex_ratio_test(&mut st, &p, Var::Z(0), 1.0, &alpha).unwrap(), Ratio::Unblocked);
    }

    #[test]
    fn own_bound_flip_on_box() {
        // z in [0,1] with F(z) = -z - 1 ends at the upper bound
        let p = AviProblem::boxed(dense(&[&[-1.0]]), vec![-1.0], vec![0.0], vec![1.0]).unwrap();
        let res = solve(&p);
        assert_eq!(res.status, SolveStatus::Solved);
        assert_eq!(res.solution.unwrap().z, vec![1.0]);
    }
}
