//! Complementary start basis at an implicit extreme point, the covering
//! vector `r`, and the starting value of `t`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::BasisFactorization;
use crate::lp_start::{lineality_basis, phase1, promote_free_variables, BasisState, LinealityBasis};
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::{SparseMatrix, SparseVector};
use crate::system::{bounds, SystemLayout, Var};

/// Generator norms differing by more than this ratio are normalized.
const GENERATOR_SPREAD: f64 = 1e6;

/// The square start system over `(z_B, z_{N_fr}, λ_𝒜, w_{N_l}, v_{N_u}, s_𝒜̄)`.
#[derive(Debug, Clone)]
pub struct StartSystem {
    pub vars: Vec<Var>,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub layout: SystemLayout,
}

impl StartSystem {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }
}

/// Basic columns of the start basis, in block order.
pub fn start_vars(st: &BasisState) -> Vec<Var> {
    let mut v: Vec<Var> = st.basic.iter().map(|&j| Var::Z(j)).collect();
    v.extend(st.free_nonbasic.iter().map(|&j| Var::Z(j)));
    v.extend(st.active.iter().map(|&i| Var::Lam(i)));
    v.extend(st.at_lower.iter().map(|&j| Var::W(j)));
    v.extend(st.at_upper.iter().map(|&j| Var::V(j)));
    v.extend(st.inactive.iter().map(|&i| Var::S(i)));
    v
}

pub fn build_start_system(p: &AviProblem, st: &BasisState) -> StartSystem {
    let layout = SystemLayout::new(p, &st.dropped_rows);
    let vars = start_vars(st);
    let none = vec![0.0; p.n()];
    let cols: Vec<SparseVector> = vars.iter().map(|&v| layout.column(p, v, &none)).collect();
    let mut rhs = layout.rhs(p);
    for &j in st.at_lower.iter().chain(&st.at_upper) {
        for (i, a) in layout.column(p, Var::Z(j), &none).iter() {
            rhs[i] -= a * st.z0[j];
        }
    }
    StartSystem {
        matrix: SparseMatrix::from_columns(layout.dim(), &cols),
        vars,
        rhs,
        layout,
    }
}

/// Solution of the start system expanded to full vectors.
#[derive(Debug, Clone)]
pub struct StartSolution {
    pub vars: Vec<Var>,
    pub values: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

fn system_factor(sys: &StartSystem, lineality_dim: usize) -> Result<BasisFactorization> {
    let cols: Vec<SparseVector> = (0..sys.dim()).map(|j| sys.matrix.col_vector(j)).collect();
    BasisFactorization::new(sys.dim(), cols).map_err(|_| Error::NotInvertibleOnLineality { lineality_dim })
}

pub fn solve_start_system(p: &AviProblem, st: &BasisState) -> Result<StartSolution> {
    let sys = build_start_system(p, st);
    let mut fact = system_factor(&sys, st.free_nonbasic.len())?;
    let values = fact.solve_forward(&sys.rhs)?;
    Ok(expand(p, st, &sys.vars, &values))
}

fn expand(p: &AviProblem, st: &BasisState, vars: &[Var], values: &[f64]) -> StartSolution {
    let (n, m) = (p.n(), p.m());
    let mut out = StartSolution {
        vars: vars.to_vec(),
        values: values.to_vec(),
        z_bar: st.z0.clone(),
        lambda: vec![0.0; m],
        w: vec![0.0; n],
        v: vec![0.0; n],
        s: vec![0.0; m],
    };
    for (&var, &x) in vars.iter().zip(values) {
        match var {
            Var::Z(j) => out.z_bar[j] = x,
            Var::Lam(i) => out.lambda[i] = x,
            Var::W(j) => out.w[j] = x,
            Var::V(j) => out.v[j] = x,
            Var::S(i) => out.s[i] = x,
            Var::T => {}
        }
    }
    let az = p.a.mul_vec(&out.z_bar);
    for &i in st.active.iter().chain(&st.dropped_rows) {
        out.s[i] = az[i] - p.b[i];
    }
    out
}

/// Sum of the generators of the normal cone at the start point, projected
/// onto the orthogonal complement of `lin C`.
pub fn covering_vector(p: &AviProblem, st: &BasisState, lin: &LinealityBasis) -> Result<Vec<f64>> {
    let n = p.n();
    let mut gens: Vec<SparseVector> = Vec::new();
    for &j in &st.at_lower {
        gens.push(SparseVector::unit(j, -1.0));
    }
    for &j in &st.at_upper {
        gens.push(SparseVector::unit(j, 1.0));
    }
    let at = p.a.transpose();
    for &i in &st.active {
        let sign = match p.kinds[i] {
            ConeRowKind::Ge => -1.0,
            ConeRowKind::Le => 1.0,
            ConeRowKind::Eq => continue,
        };
        gens.push(at.col_vector(i).scaled(sign));
    }
    if gens.is_empty() {
        return Err(Error::DegenerateNormalCone);
    }
    let norms: Vec<f64> = gens.iter().map(|g| g.values.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let normalize = hi > GENERATOR_SPREAD * lo;
    let mut r = vec![0.0; n];
    for (g, &nrm) in gens.iter().zip(&norms) {
        let scale = if normalize { 1.0 / nrm } else { 1.0 };
        for (j, x) in g.iter() {
            r[j] += scale * x;
        }
    }
    project_out(&mut r, &lin.vectors);
    let rn = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if rn <= 1e-14 * hi.max(1.0) {
        return Err(Error::DegenerateNormalCone);
    }
    Ok(r)
}

/// Removes the component of `x` in the span of `basis`.
pub(crate) fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    if basis.is_empty() {
        return;
    }
    let n = x.len();
    let w = DMatrix::from_fn(n, basis.len(), |i, j| basis[j][i]);
    let q = w.qr().q();
    let xv = nalgebra::DVector::from_column_slice(x);
    let proj = &q * (q.transpose() * &xv);
    for i in 0..n {
        x[i] -= proj[i];
    }
}

/// Everything the pivot engine needs to start.
#[derive(Debug, Clone)]
pub struct RayStartData {
    pub state: BasisState,
    pub lineality: LinealityBasis,
    pub vars: Vec<Var>,
    /// Basic values at `t = 0`.
    pub beta0: Vec<f64>,
    /// Change of the basic values per unit of `t`.
    pub beta_r: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub w0: Vec<f64>,
    pub v0: Vec<f64>,
    pub s0: Vec<f64>,
    pub r: Vec<f64>,
    pub t0: f64,
    /// `r = 0`: the normal cone is a subspace and the start point solves.
    pub degenerate: bool,
}

impl RayStartData {
    /// `max_j |⟨Mz̄ + q, v^j⟩|`.
    pub fn lineality_stationarity(&self, p: &AviProblem) -> f64 {
        let mut g = p.m_mat.mul_vec(&self.z_bar);
        for (gj, qj) in g.iter_mut().zip(&p.q) {
            *gj += qj;
        }
        max_abs_dot(&g, &self.lineality.vectors)
    }

    /// `max_j |⟨r, v^j⟩|`.
    pub fn lineality_r(&self) -> f64 {
        max_abs_dot(&self.r, &self.lineality.vectors)
    }

    /// Stationarity residual of the start basis at parameter `t`.
    pub fn stationarity_at(&self, p: &AviProblem, t: f64) -> f64 {
        let (n, m) = (p.n(), p.m());
        let mut lam = vec![0.0; m];
        let mut w = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut z = self.z_bar.clone();
        for ((&var, &b0), &br) in self.vars.iter().zip(&self.beta0).zip(&self.beta_r) {
            let x = b0 + t * br;
            match var {
                Var::Z(j) => z[j] = x,
                Var::Lam(i) => lam[i] = x,
                Var::W(j) => w[j] = x,
                Var::V(j) => v[j] = x,
                _ => {}
            }
        }
        let mut g = p.m_mat.mul_vec(&z);
        let atl = p.a.tr_mul_vec(&lam);
        (0..n)
            .map(|j| {
                g[j] += p.q[j] - atl[j] - w[j] + v[j] - t * self.r[j];
                g[j].abs()
            })
            .fold(0.0, f64::max)
    }
}

fn max_abs_dot(x: &[f64], vs: &[Vec<f64>]) -> f64 {
    vs.iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Smallest `t ≥ 0` making every sign-constrained start multiplier
/// feasible along `β0 + t·β_r`.
pub fn initial_t(p: &AviProblem, vars: &[Var], beta0: &[f64], beta_r: &[f64]) -> Result<f64> {
    let mut t0: f64 = 0.0;
    for ((&var, &b0), &br) in vars.iter().zip(beta0).zip(beta_r) {
        let (lo, hi) = bounds(p, var);
        let tol = 1e-12 * (1.0 + b0.abs());
        if b0 < lo - tol {
            if br <= 0.0 {
                return Err(Error::NumericalFailure(format!("start variable {var} cannot be made feasible")));
            }
            t0 = t0.max((lo - b0) / br);
        } else if b0 > hi + tol {
            if br >= 0.0 {
                return Err(Error::NumericalFailure(format!("start variable {var} cannot be made feasible")));
            }
            t0 = t0.max((hi - b0) / br);
        }
    }
    Ok(t0)
}

/// Phase 1, promotion, start system, covering vector and `t0`.
pub fn ray_start(p: &AviProblem) -> Result<RayStartData> {
    let st = phase1(p)?;
    let mut st = promote_free_variables(p, st)?;
    let lineality = lineality_basis(p, &mut st)?;
    let sys = build_start_system(p, &st);
    let mut fact = system_factor(&sys, lineality.dim())?;
    let beta0 = fact.solve_forward(&sys.rhs)?;
    let start = expand(p, &st, &sys.vars, &beta0);

    let (r, degenerate) = match covering_vector(p, &st, &lineality) {
        Ok(r) => (r, false),
        Err(Error::DegenerateNormalCone) => (vec![0.0; p.n()], true),
        Err(e) => return Err(e),
    };
    let mut rhs_r = r.clone();
    rhs_r.extend(std::iter::repeat(0.0).take(sys.layout.rows.len()));
    let beta_r = fact.solve_forward(&rhs_r)?;
    let t0 = if degenerate { 0.0 } else { initial_t(p, &sys.vars, &beta0, &beta_r)? };
    log::debug!("ray start: dim={} lin dim={} t0={t0:e}", sys.dim(), lineality.dim());
    Ok(RayStartData {
        state: st,
        lineality,
        vars: sys.vars,
        beta0,
        beta_r,
        z_bar: start.z_bar,
        lambda0: start.lambda,
        w0: start.w,
        v0: start.v,
        s0: start.s,
        r,
        t0,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn prepared(p: &AviProblem) -> BasisState {
        promote_free_variables(p, phase1(p).unwrap()).unwrap()
    }

    #[test]
    fn orthant_start_system_is_minus_identity() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let st = prepared(&p);
        let sys = build_start_system(&p, &st);
        assert_eq!(sys.matrix.to_dense(), vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(sys.rhs, vec![-1.0, -1.0]);
        let sol = solve_start_system(&p, &st).unwrap();
        assert_eq!(sol.w, vec![1.0, 1.0]);
    }

    #[test]
    fn block_sizes_with_equality_row() {
        // z1 + z2 = 1 with z1 ≥ 0 and z2 free
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            dense(&[&[1.0, 1.0]]),
            vec![1.0],
            vec![ConeRowKind::Eq],
            vec![0.0, -INF],
            vec![INF, INF],
        )
        .unwrap();
        let st = prepared(&p);
        let sys = build_start_system(&p, &st);
        assert_eq!(sys.dim(), 3);
        assert_eq!(st.basic.len() + st.free_nonbasic.len() + st.active.len() + st.at_lower.len(), 3);
    }

    #[test]
    fn box_dimension_is_n() {
        let p = AviProblem::boxed(SparseMatrix::identity(3), vec![0.0; 3], vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(build_start_system(&p, &prepared(&p)).dim(), 3);
    }

    #[test]
    fn shift_along_line() {
        // C = {z1 - z2 = 0}, M = I, q = (1,1) → z̄ = (-1,-1)
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![1.0, 1.0],
            dense(&[&[1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Eq],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let sol = solve_start_system(&p, &prepared(&p)).unwrap();
        assert!((sol.z_bar[0] + 1.0).abs() < 1e-12 && (sol.z_bar[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_on_line() {
        let p = AviProblem::new(
            dense(&[&[1.0, -1.0], &[-1.0, 1.0]]),
            vec![0.0, 0.0],
            dense(&[&[1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Eq],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        assert!(matches!(
            solve_start_system(&p, &prepared(&p)),
            Err(Error::NotInvertibleOnLineality { lineality_dim: 1 })
        ));
    }

    #[test]
    fn covering_vectors() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let mut st = prepared(&p);
        let lin = lineality_basis(&p, &mut st).unwrap();
        assert_eq!(covering_vector(&p, &st, &lin).unwrap(), vec![-1.0, -1.0]);

        // z1 + z2 ≤ 1, z free: promotion makes the row active
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            dense(&[&[1.0, 1.0]]),
            vec![1.0],
            vec![ConeRowKind::Le],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let mut st = prepared(&p);
        assert_eq!(st.active, vec![0]);
        let lin = lineality_basis(&p, &mut st).unwrap();
        let r = covering_vector(&p, &st, &lin).unwrap();
        // (1,1) projected off the line (1,-1) stays (1,1)
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);

        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            dense(&[&[1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Eq],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let mut st = prepared(&p);
        let lin = lineality_basis(&p, &mut st).unwrap();
        assert!(matches!(covering_vector(&p, &st, &lin), Err(Error::DegenerateNormalCone)));
    }

    #[test]
    fn t0_values() {
        // stationarity at z = 0 reads w(t) = q - t·r = q + t·(1,1)
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let d = ray_start(&p).unwrap();
        assert_eq!(d.t0, 0.0);
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![-1.0, -1.0]).unwrap();
        let d = ray_start(&p).unwrap();
        assert!((d.t0 - 1.0).abs() < 1e-15);
        assert!(d.stationarity_at(&p, d.t0) < 1e-12);
    }
}
