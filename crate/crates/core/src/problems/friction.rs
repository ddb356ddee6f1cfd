//! Frictional contact between bodies, one time step, with each Coulomb cone
//! replaced by a polyhedral cone over a regular polygon.
//!
//! Per contact the force is `r = (r_n, r_t1, r_t2)`. The full form acts on
//! `(v, r, y)` with matrix `[[M, -H, 0], [Hᵀ, 0, E], [H̄ᵀ, 0, E]]` and
//! vector `(-f, w, w̄)`; `v` is free. The condensed form eliminates `v`:
//! `[[W, E], [W̄, E]]` on `(r, y)` with `W = HᵀM⁻¹H`, `W̄ = H̄ᵀM⁻¹H`,
//! `ω = w + HᵀM⁻¹f` and `ω̄ = w̄ + H̄ᵀM⁻¹f`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::SparseMatrix;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionParams {
    pub n_contacts: usize,
    pub n_dof_per_body: usize,
    pub n_bodies: usize,
    /// One coefficient per contact, or a single one for all.
    pub mu: Vec<f64>,
    /// Sides of the polygon replacing each disk.
    pub facets: usize,
    pub condensed: bool,
    pub seed: u64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self {
            n_contacts: 4,
            n_dof_per_body: 6,
            n_bodies: 1,
            mu: vec![0.3],
            facets: 8,
            condensed: true,
            seed: 0,
        }
    }
}

impl FrictionParams {
    fn mu_of(&self, c: usize) -> f64 {
        if self.mu.len() == 1 {
            self.mu[0]
        } else {
            self.mu[c]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if self.n_contacts == 0 || self.n_bodies == 0 || self.n_dof_per_body == 0 {
            return bad("contact, body and dof counts must be positive".into());
        }
        if self.facets < 3 {
            return bad(format!("a polygon needs at least 3 facets, got {}", self.facets));
        }
        if self.mu.len() != 1 && self.mu.len() != self.n_contacts {
            return bad(format!("expected 1 or {} friction coefficients, got {}", self.n_contacts, self.mu.len()));
        }
        if let Some(m) = self.mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return bad(format!("friction coefficients must be positive, got {m}"));
        }
        Ok(())
    }

    /// Number of generalized velocities.
    pub fn n_velocity(&self) -> usize {
        self.n_dof_per_body * self.n_bodies
    }
}

/// Generated data next to the assembled problem.
#[derive(Debug, Clone)]
pub struct FrictionInstance {
    pub problem: AviProblem,
    pub mass: SparseMatrix,
    /// `N × 3n_c`, maps contact forces to generalized forces.
    pub h: SparseMatrix,
    pub f: Vec<f64>,
    pub w: Vec<f64>,
    /// Facet rows of one polygonal cone per contact, in local coordinates.
    pub cone_rows: Vec<Vec<[f64; 3]>>,
}

/// `(i, i)` entries of `E`: the normal component of each contact.
fn is_normal(i: usize) -> bool {
    i % 3 == 0
}

/// Rows `g` with `g·r ≥ 0` describing `{(t, tx) : t ≥ 0, x ∈ μD_p}`, where
/// `D_p` is the regular `p`-gon inscribed in the unit disk with a vertex on
/// the first tangential axis.
pub fn polygon_cone_rows(mu: f64, p: usize) -> Vec<[f64; 3]> {
    let h = mu * (PI / p as f64).cos();
    (0..p)
        .map(|k| {
            let phi = (2 * k + 1) as f64 * PI / p as f64;
            [h, -phi.cos(), -phi.sin()]
        })
        .collect()
}

/// Banded symmetric positive definite block per body.
fn mass_matrix(rng: &mut ChaCha8Rng, prm: &FrictionParams) -> DMatrix<f64> {
    let d = prm.n_dof_per_body;
    let nv = prm.n_velocity();
    let band = 2.min(d - 1);
    let mut m = DMatrix::zeros(nv, nv);
    for b in 0..prm.n_bodies {
        let o = b * d;
        for i in 0..d {
            for k in 1..=band {
                if i + k < d {
                    let x = rng.gen_range(-0.5..0.5) / k as f64;
                    m[(o + i, o + i + k)] = x;
                    m[(o + i + k, o + i)] = x;
                }
            }
        }
        for i in 0..d {
            let off: f64 = (0..nv).filter(|&j| j != o + i).map(|j| m[(o + i, j)].abs()).sum();
            m[(o + i, o + i)] = 1.0 + off + rng.gen_range(0.0..1.0);
        }
    }
    m
}

/// Each contact touches one body, or two with opposite signs when there
/// are several bodies, through a window of at most six generalized
/// coordinates. About half of the consecutive contact pairs oppose each
/// other, which puts squeezing forces into `ker H ∩ K_p`.
fn contact_map(rng: &mut ChaCha8Rng, prm: &FrictionParams) -> DMatrix<f64> {
    let d = prm.n_dof_per_body;
    let win = d.min(6);
    let mut h = DMatrix::zeros(prm.n_velocity(), 3 * prm.n_contacts);
    for c in 0..prm.n_contacts {
        let b1 = c % prm.n_bodies;
        let mut bodies = vec![(b1, 1.0)];
        if prm.n_bodies > 1 && c % 2 == 1 {
            bodies.push(((b1 + 1) % prm.n_bodies, -1.0));
        }
        for (b, sign) in bodies {
            let start = b * d + rng.gen_range(0..=d - win);
            for i in start..start + win {
                for k in 0..3 {
                    h[(i, 3 * c + k)] = sign * rng.gen_range(-1.0..1.0);
                }
            }
        }
    }
    for c in (0..prm.n_contacts.saturating_sub(1)).step_by(2) {
        if rng.gen_bool(0.5) {
            for k in 0..3 {
                let col = -h.column(3 * c + k);
                h.set_column(3 * c + 3 + k, &col);
            }
        }
    }
    h
}

/// The problem of the requested form.
pub fn gen_friction(prm: &FrictionParams) -> Result<AviProblem> {
    Ok(gen_friction_instance(prm)?.problem)
}

pub fn gen_friction_instance(prm: &FrictionParams) -> Result<FrictionInstance> {
    prm.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(prm.seed);
    let nc = prm.n_contacts;
    let nr = 3 * nc;
    let nv = prm.n_velocity();
    let mass = mass_matrix(&mut rng, prm);
    let h = contact_map(&mut rng, prm);
    let f: DVector<f64> = DVector::from_fn(nv, |_, _| rng.gen_range(-1.0..1.0));
    let cone_rows: Vec<Vec<[f64; 3]>> = (0..nc).map(|c| polygon_cone_rows(prm.mu_of(c), prm.facets)).collect();

    // w = Σ θ_k g_k + Hᵀξ lies in K_p^D + range Hᵀ ⊆ (ker H ∩ K_p)^D
    let mut w = DVector::zeros(nr);
    for (c, rows) in cone_rows.iter().enumerate() {
        for g in rows {
            let th = rng.gen_range(0.0..0.5);
            for k in 0..3 {
                w[3 * c + k] += th * g[k];
            }
        }
    }
    let xi = DVector::from_fn(nv, |_, _| rng.gen_range(-1.0..1.0));
    w += h.transpose() * xi;
    let wbar = DVector::from_fn(nr, |i, _| if is_normal(i) { 0.0 } else { w[i] });
    let hbar_t = DMatrix::from_fn(nr, nv, |i, j| if is_normal(i) { 0.0 } else { h[(j, i)] });

    let (m_full, q, nvar, offset) = if prm.condensed {
        let chol = mass.clone().cholesky().expect("diagonally dominant mass matrix");
        let minv_h = chol.solve(&h);
        let minv_f = chol.solve(&f);
        let wm = h.transpose() * &minv_h;
        let wbm = &hbar_t * &minv_h;
        let omega = &w + h.transpose() * &minv_f;
        let omega_bar = &wbar + &hbar_t * &minv_f;
        let mut m = DMatrix::zeros(2 * nr, 2 * nr);
        m.view_mut((0, 0), (nr, nr)).copy_from(&wm);
        m.view_mut((nr, 0), (nr, nr)).copy_from(&wbm);
        for i in (0..nr).filter(|&i| is_normal(i)) {
            m[(i, nr + i)] = 1.0;
            m[(nr + i, nr + i)] = 1.0;
        }
        let q: Vec<f64> = omega.iter().chain(omega_bar.iter()).copied().collect();
        (m, q, 2 * nr, 0)
    } else {
        let n = nv + 2 * nr;
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (nv, nv)).copy_from(&mass);
        m.view_mut((0, nv), (nv, nr)).copy_from(&(-&h));
        m.view_mut((nv, 0), (nr, nv)).copy_from(&h.transpose());
        m.view_mut((nv + nr, 0), (nr, nv)).copy_from(&hbar_t);
        for i in (0..nr).filter(|&i| is_normal(i)) {
            m[(nv + i, nv + nr + i)] = 1.0;
            m[(nv + nr + i, nv + nr + i)] = 1.0;
        }
        let q: Vec<f64> = f.iter().map(|x| -x).chain(w.iter().copied()).chain(wbar.iter().copied()).collect();
        (m, q, n, nv)
    };

    // facet rows for r, then for y
    let mut trip = Vec::new();
    let mut row = 0;
    for block in 0..2 {
        for (c, rows) in cone_rows.iter().enumerate() {
            for g in rows {
                for k in 0..3 {
                    if g[k] != 0.0 {
                        trip.push((row, offset + block * nr + 3 * c + k, g[k]));
                    }
                }
                row += 1;
            }
        }
    }
    let a = SparseMatrix::from_triplets(row, nvar, &trip)?;
    let mut l = vec![-INF; nvar];
    for i in (0..2 * nr).filter(|&i| is_normal(i % nr)) {
        l[offset + i] = 0.0;
    }
    let problem = AviProblem::new(
        SparseMatrix::from_nalgebra(&m_full, 0.0),
        q,
        a,
        vec![0.0; row],
        vec![ConeRowKind::Ge; row],
        l,
        vec![INF; nvar],
    )?;
    Ok(FrictionInstance {
        problem,
        mass: SparseMatrix::from_nalgebra(&mass, 0.0),
        h: SparseMatrix::from_nalgebra(&h, 0.0),
        f: f.iter().copied().collect(),
        w: w.iter().copied().collect(),
        cone_rows,
    })
}

impl FrictionInstance {
    /// Nonzero directions `r ∈ ker H ∩ K_p`, normalized so the normal
    /// components sum to one, from LPs with seeded random objectives.
    pub fn kernel_cone_directions(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        use crate::simplex::{solve_lp, LpProblem, LpStatus};
        let nr = self.h.ncols();
        let nv = self.h.nrows();
        let mut trip: Vec<(usize, usize, f64)> = self.h.triplets().collect();
        let mut lo = vec![0.0; nv];
        let mut hi = vec![0.0; nv];
        let mut row = nv;
        for (c, rows) in self.cone_rows.iter().enumerate() {
            for g in rows {
                for k in 0..3 {
                    trip.push((row, 3 * c + k, g[k]));
                }
                lo.push(0.0);
                hi.push(INF);
                row += 1;
            }
        }
        for c in 0..nr / 3 {
            trip.push((row, 3 * c, 1.0));
        }
        lo.push(1.0);
        hi.push(1.0);
        let a = SparseMatrix::from_triplets(row + 1, nr, &trip)?;
        let l: Vec<f64> = (0..nr).map(|i| if is_normal(i) { 0.0 } else { -INF }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..count {
            let c: Vec<f64> = (0..nr).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lp = LpProblem::ranged(a.clone(), lo.clone(), hi.clone(), l.clone(), vec![INF; nr], c);
            let res = solve_lp(&lp)?;
            match res.status {
                LpStatus::Optimal => out.push(res.x),
                LpStatus::Infeasible(_) => break,
                LpStatus::Unbounded => {}
            }
        }
        Ok(out)
    }
}
