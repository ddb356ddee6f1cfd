//! Phase-1 basis over `C`, promotion of nonbasic free variables, and the
//! lineality-space basis read off the final basis.

use crate::error::{Error, Result};
use crate::linalg::BasisFactorization;
use crate::problem::{AviProblem, ConeRowKind};
use crate::simplex::{LpProblem, Simplex};
use crate::sparse::SparseVector;

pub use crate::simplex::FarkasCertificate;

/// Index sets of a basic solution plus the point itself.
///
/// `basic` and `active` have equal length; their order fixes the row and
/// column order of the factorization of `A_{𝒜B}`. Rows found redundant
/// during phase 1 are listed in `dropped_rows` and belong to neither
/// `active` nor `inactive`.
#[derive(Debug, Clone)]
pub struct BasisState {
    pub basic: Vec<usize>,
    pub at_lower: Vec<usize>,
    pub at_upper: Vec<usize>,
    pub free_nonbasic: Vec<usize>,
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub dropped_rows: Vec<usize>,
    pub z0: Vec<f64>,
    fact: BasisFactorization,
}

impl BasisState {
    /// Builds the state from an index partition, computing
    /// `z_B = A_{𝒜B}⁻¹(b_𝒜 - A_{𝒜N} z_N)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_partition(
        p: &AviProblem,
        mut basic: Vec<usize>,
        mut at_lower: Vec<usize>,
        mut at_upper: Vec<usize>,
        mut free_nonbasic: Vec<usize>,
        mut active: Vec<usize>,
        mut inactive: Vec<usize>,
        mut dropped_rows: Vec<usize>,
    ) -> Result<Self> {
        for s in [
            &mut basic,
            &mut at_lower,
            &mut at_upper,
            &mut free_nonbasic,
            &mut active,
            &mut inactive,
            &mut dropped_rows,
        ] {
            s.sort_unstable();
        }
        if basic.len() != active.len() {
            return Err(Error::NumericalFailure(format!(
                "basis has {} basic variables but {} active rows",
                basic.len(),
                active.len()
            )));
        }
        let n = p.n();
        let mut z0 = vec![0.0; n];
        for &j in &at_lower {
            z0[j] = p.l[j];
        }
        for &j in &at_upper {
            z0[j] = p.u[j];
        }
        let fact = ab_factor(p, &basic, &active)?;
        let mut st = Self {
            basic,
            at_lower,
            at_upper,
            free_nonbasic,
            active,
            inactive,
            dropped_rows,
            z0,
            fact,
        };
        let az = p.a.mul_vec(&st.z0);
        let rhs: Vec<f64> = st.active.iter().map(|&i| p.b[i] - az[i]).collect();
        let zb = st.fact.solve_forward(&rhs)?;
        for (k, &j) in st.basic.iter().enumerate() {
            st.z0[j] = zb[k];
        }
        Ok(st)
    }

    /// Solves `A_{𝒜B} x = rhs` (rhs indexed like `active`).
    pub fn solve_ab(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.fact.solve_forward(rhs)?)
    }

    /// Solves `A_{𝒜B}ᵀ y = rhs` (rhs indexed like `basic`).
    pub fn solve_ab_transpose(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.fact.solve_transpose(rhs)?)
    }

    /// Rows taking part in the problem (active and inactive, ascending).
    pub fn live_rows(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.active.iter().chain(&self.inactive).copied().collect();
        r.sort_unstable();
        r
    }

    /// `d^j = A_{𝒜B}⁻¹ A_{𝒜,j}`.
    pub fn d_column(&mut self, p: &AviProblem, j: usize) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.active.iter().map(|&i| p.a.get(i, j)).collect();
        self.solve_ab(&rhs)
    }

    /// Every Table-1 property that can be checked numerically, as messages.
    pub fn check_invariants(&self, p: &AviProblem, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let n = p.n();
        let mut seen = vec![0u8; n];
        for s in [&self.basic, &self.at_lower, &self.at_upper, &self.free_nonbasic] {
            for &j in s.iter() {
                seen[j] += 1;
            }
        }
        if seen.iter().any(|&c| c != 1) {
            out.push("variable index sets do not partition 0..n".into());
        }
        let mut rs = vec![0u8; p.m()];
        for s in [&self.active, &self.inactive, &self.dropped_rows] {
            for &i in s.iter() {
                rs[i] += 1;
            }
        }
        if rs.iter().any(|&c| c != 1) {
            out.push("row index sets do not partition 0..m".into());
        }
        if self.basic.len() != self.active.len() {
            out.push("|B| != |active|".into());
        }
        for &j in &self.at_lower {
            if !(p.l[j].is_finite() && self.z0[j] == p.l[j]) {
                out.push(format!("z_{j} not at a finite lower bound"));
            }
        }
        for &j in &self.at_upper {
            if !(p.u[j].is_finite() && self.z0[j] == p.u[j]) {
                out.push(format!("z_{j} not at a finite upper bound"));
            }
        }
        for &j in &self.free_nonbasic {
            if !p.is_free(j) || self.z0[j] != 0.0 {
                out.push(format!("nonbasic free z_{j} is not a free variable at 0"));
            }
        }
        let az = p.a.mul_vec(&self.z0);
        for &i in &self.active {
            if (az[i] - p.b[i]).abs() > tol * (1.0 + p.b[i].abs()) {
                out.push(format!("active row {i} not tight"));
            }
        }
        if p.primal_violation(&self.z0) > tol * (1.0 + p.b.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            out.push("z0 is not feasible".into());
        }
        out
    }
}

fn ab_factor(p: &AviProblem, basic: &[usize], active: &[usize]) -> Result<BasisFactorization> {
    let mut row_pos = vec![usize::MAX; p.m()];
    for (k, &i) in active.iter().enumerate() {
        row_pos[i] = k;
    }
    let cols = basic
        .iter()
        .map(|&j| {
            let mut entries: Vec<(usize, f64)> = p
                .a
                .col(j)
                .filter(|&(i, _)| row_pos[i] != usize::MAX)
                .map(|(i, v)| (row_pos[i], v))
                .collect();
            entries.sort_by_key(|e| e.0);
            SparseVector {
                indices: entries.iter().map(|e| e.0).collect(),
                values: entries.iter().map(|e| e.1).collect(),
            }
        })
        .collect();
    Ok(BasisFactorization::new(basic.len(), cols)?)
}

/// Basic feasible point of `C` from phase 1 (zero objective).
pub fn phase1(p: &AviProblem) -> Result<BasisState> {
    let lp = LpProblem::feasibility(p);
    let mut sx = Simplex::new(&lp)?;
    if let Some(cert) = sx.phase1()? {
        return Err(Error::Infeasible(cert));
    }
    let n = p.n();
    let (mut basic, mut at_lower, mut at_upper, mut free) = (vec![], vec![], vec![], vec![]);
    for j in 0..n {
        if sx.in_basis[j].is_some() {
            basic.push(j);
        } else if p.l[j].is_finite() && sx.x[j] == p.l[j] {
            at_lower.push(j);
        } else if p.u[j].is_finite() && sx.x[j] == p.u[j] {
            at_upper.push(j);
        } else if p.is_free(j) && sx.x[j] == 0.0 {
            free.push(j);
        } else {
            return Err(Error::NumericalFailure(format!("nonbasic z_{j} is off its bounds")));
        }
    }
    let (mut active, mut inactive) = (vec![], vec![]);
    for &i in sx.live_rows() {
        if sx.in_basis[n + i].is_some() {
            inactive.push(i);
        } else {
            active.push(i);
        }
    }
    let st = BasisState::from_partition(p, basic, at_lower, at_upper, free, active, inactive, sx.dropped.clone())?;
    log::debug!(
        "phase 1: |B|={} |N_l|={} |N_u|={} |N_fr|={} |A|={} dropped={:?}",
        st.basic.len(),
        st.at_lower.len(),
        st.at_upper.len(),
        st.free_nonbasic.len(),
        st.active.len(),
        st.dropped_rows
    );
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basic {
    Z(usize),
    S(usize),
}

impl Basic {
    fn order_key(self, n: usize) -> usize {
        match self {
            Basic::Z(j) => j,
            Basic::S(i) => n + i,
        }
    }
}

/// Pivots nonbasic free variables into the basis while some bounded basic
/// variable blocks them. Scans `N_fr` in ascending order and restarts after
/// every pivot.
pub fn promote_free_variables(p: &AviProblem, mut st: BasisState) -> Result<BasisState> {
    let n = p.n();
    let mut changed = true;
    while changed {
        changed = false;
        for j in st.free_nonbasic.clone() {
            let rows = st.live_rows();
            let mut row_pos = vec![usize::MAX; p.m()];
            for (k, &i) in rows.iter().enumerate() {
                row_pos[i] = k;
            }
            let mut vars: Vec<Basic> = st.basic.iter().map(|&k| Basic::Z(k)).collect();
            vars.extend(st.inactive.iter().map(|&i| Basic::S(i)));
            let cols: Vec<SparseVector> = vars
                .iter()
                .map(|&v| match v {
                    Basic::Z(k) => restrict(p.a.col(k), &row_pos),
                    Basic::S(i) => SparseVector::unit(row_pos[i], -1.0),
                })
                .collect();
            let mut fact = BasisFactorization::new(rows.len(), cols)?;
            let alpha = fact.solve_forward_sparse(&restrict(p.a.col(j), &row_pos))?;
            let amax = alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let ptol = 1e-9 * amax.max(1.0);
            let az = p.a.mul_vec(&st.z0);

            let mut found = None;
            for dir in [1.0, -1.0] {
                let mut best: Option<(f64, usize, Basic, bool)> = None;
                for (pos, &v) in vars.iter().enumerate() {
                    let rate = -dir * alpha[pos];
                    if rate.abs() <= ptol {
                        continue;
                    }
                    let (val, lo, hi) = match v {
                        Basic::Z(k) => (st.z0[k], p.l[k], p.u[k]),
                        Basic::S(i) => {
                            let (lo, hi) = match p.kinds[i] {
                                ConeRowKind::Ge => (0.0, f64::INFINITY),
                                ConeRowKind::Le => (f64::NEG_INFINITY, 0.0),
                                ConeRowKind::Eq => (0.0, 0.0),
                            };
                            (az[i] - p.b[i], lo, hi)
                        }
                    };
                    let (bound, hits_upper) = if rate < 0.0 { (lo, false) } else { (hi, true) };
                    if !bound.is_finite() {
                        continue;
                    }
                    let theta = ((bound - val) / rate).max(0.0);
                    let key = v.order_key(n);
                    let better = match best {
                        None => true,
                        Some((bt, bk, _, _)) => {
                            let tie = (theta - bt).abs() <= 1e-12 * (1.0 + bt);
                            (tie && key < bk) || (!tie && theta < bt)
                        }
                    };
                    if better {
                        best = Some((theta, key, v, hits_upper));
                    }
                }
                if let Some((_, _, v, up)) = best {
                    found = Some((v, up));
                    break;
                }
            }
            let Some((leaving, hits_upper)) = found else {
                continue;
            };
            log::debug!("promote: z_{j} enters, {leaving:?} leaves");
            st.free_nonbasic.retain(|&k| k != j);
            st.basic.push(j);
            match leaving {
                Basic::Z(k) => {
                    st.basic.retain(|&b| b != k);
                    if hits_upper {
                        st.at_upper.push(k);
                    } else {
                        st.at_lower.push(k);
                    }
                }
                Basic::S(i) => {
                    st.inactive.retain(|&r| r != i);
                    st.active.push(i);
                }
            }
            st = BasisState::from_partition(
                p,
                st.basic,
                st.at_lower,
                st.at_upper,
                st.free_nonbasic,
                st.active,
                st.inactive,
                st.dropped_rows,
            )?;
            changed = true;
            break;
        }
    }
    Ok(st)
}

fn restrict(col: impl Iterator<Item = (usize, f64)>, row_pos: &[usize]) -> SparseVector {
    let mut entries: Vec<(usize, f64)> = col
        .filter(|&(i, _)| row_pos[i] != usize::MAX)
        .map(|(i, v)| (row_pos[i], v))
        .collect();
    entries.sort_by_key(|e| e.0);
    SparseVector {
        indices: entries.iter().map(|e| e.0).collect(),
        values: entries.iter().map(|e| e.1).collect(),
    }
}

/// Basis `{v^j : j ∈ N_fr}` of `lin C`: `v^j_j = 1`,
/// `v^j_B = -A_{𝒜B}⁻¹ A_{𝒜,j}`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LinealityBasis {
    pub free: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
}

impl LinealityBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Checks `z + λv ∈ C` for every vector and `λ ∈ {±1, ±10}`.
    pub fn feasible_along(&self, p: &AviProblem, z: &[f64], tol: f64) -> bool {
        self.vectors.iter().all(|v| {
            [-10.0, -1.0, 1.0, 10.0].iter().all(|&lam| {
                let y: Vec<f64> = z.iter().zip(v).map(|(a, b)| a + lam * b).collect();
                p.primal_violation(&y) <= tol * (1.0 + lam.abs())
            })
        })
    }
}

pub fn lineality_basis(p: &AviProblem, st: &mut BasisState) -> Result<LinealityBasis> {
    let n = p.n();
    let mut vectors = Vec::with_capacity(st.free_nonbasic.len());
    for &j in &st.free_nonbasic.clone() {
        let d = st.d_column(p, j)?;
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        for (k, &b) in st.basic.iter().enumerate() {
            v[b] = -d[k];
        }
        vectors.push(v);
    }
    Ok(LinealityBasis {
        free: st.free_nonbasic.clone(),
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    const INF: f64 = f64::INFINITY;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn set(n: usize, a: SparseMatrix, b: Vec<f64>, kinds: Vec<ConeRowKind>, l: Vec<f64>, u: Vec<f64>) -> AviProblem {
        AviProblem::new(SparseMatrix::zeros(n, n), vec![0.0; n], a, b, kinds, l, u).unwrap()
    }

    #[test]
    fn nonnegative_orthant() {
        let p = set(2, SparseMatrix::zeros(0, 2), vec![], vec![], vec![0.0; 2], vec![INF; 2]);
        let st = phase1(&p).unwrap();
        assert_eq!(st.z0, vec![0.0, 0.0]);
        assert!(st.basic.is_empty());
        assert_eq!(st.at_lower, vec![0, 1]);
    }

    #[test]
    fn simplex_segment_vertex() {
        let p = set(2, dense(&[&[1.0, 1.0]]), vec![1.0], vec![ConeRowKind::Eq], vec![0.0; 2], vec![INF; 2]);
        let st = phase1(&p).unwrap();
        let z = &st.z0;
        let vertex = (z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12 || z[0].abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12;
        assert!(vertex, "{z:?}");
        assert!(st.check_invariants(&p, 1e-10).is_empty());
    }

    #[test]
    fn empty_set_certified() {
        let p = set(1, dense(&[&[1.0]]), vec![-1.0], vec![ConeRowKind::Le], vec![0.0], vec![INF]);
        match phase1(&p) {
            Err(Error::Infeasible(cert)) => assert!(cert.verify(&p)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn promotion_on_whole_space_is_identity() {
        let p = set(2, SparseMatrix::zeros(0, 2), vec![], vec![], vec![-INF; 2], vec![INF; 2]);
        let st = promote_free_variables(&p, phase1(&p).unwrap()).unwrap();
        assert_eq!(st.free_nonbasic, vec![0, 1]);
        assert_eq!(st.z0, vec![0.0, 0.0]);
    }

    #[test]
    fn promotion_against_halfspace() {
        let p = set(2, dense(&[&[1.0, -1.0]]), vec![0.0], vec![ConeRowKind::Ge], vec![-INF; 2], vec![INF; 2]);
        let mut st = promote_free_variables(&p, phase1(&p).unwrap()).unwrap();
        assert_eq!(st.free_nonbasic.len(), 1);
        let lb = lineality_basis(&p, &mut st).unwrap();
        assert_eq!(lb.dim(), 1);
        let v = &lb.vectors[0];
        assert!((v[0] - v[1]).abs() < 1e-12 && v[0].abs() > 0.5);
        assert!(lb.feasible_along(&p, &st.z0, 1e-10));
    }

    #[test]
    fn boxes_need_no_promotion() {
        let p = set(2, SparseMatrix::zeros(0, 2), vec![], vec![], vec![0.0, -1.0], vec![1.0, 2.0]);
        let st = phase1(&p).unwrap();
        let before = (st.basic.clone(), st.at_lower.clone(), st.free_nonbasic.clone());
        let st = promote_free_variables(&p, st).unwrap();
        assert_eq!(before, (st.basic.clone(), st.at_lower.clone(), st.free_nonbasic.clone()));
        assert!(st.free_nonbasic.is_empty());
    }

    #[test]
    fn plane_through_origin_has_two_lines() {
        let p = set(3, dense(&[&[1.0, 1.0, 1.0]]), vec![0.0], vec![ConeRowKind::Eq], vec![-INF; 3], vec![INF; 3]);
        let mut st = promote_free_variables(&p, phase1(&p).unwrap()).unwrap();
        let lb = lineality_basis(&p, &mut st).unwrap();
        assert_eq!(lb.dim(), 2);
        for v in &lb.vectors {
            assert!(p.a.mul_vec(v)[0].abs() < 1e-12);
        }
        assert!(lb.feasible_along(&p, &st.z0, 1e-10));
    }
}
