//! The box reformulation, the reduction onto the orthogonal complement of
//! `lin C`, fill-in measurement, and face counting.

pub mod nnf;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp_start::{lineality_basis, phase1, promote_free_variables};
use crate::problem::{AviProblem, ConeRowKind, Solution};
use crate::sparse::SparseMatrix;

pub use nnf::{enumerate_faces, nnf_exact, nnf_halfspace, nnf_interval, nnf_mcp_product, nnf_upper_bound};

const INF: f64 = f64::INFINITY;
/// Entries below this magnitude are not counted as nonzeros.
pub const FILL_TOL: f64 = 1e-12;

/// Box-constrained problem in `(z, λ)` with matrix `[[M, -Aᵀ], [A, 0]]`
/// and vector `(q, -b)`.
pub fn to_mcp(p: &AviProblem) -> AviProblem {
    let (n, m) = (p.n(), p.m());
    if m == 0 {
        return p.clone();
    }
    let mut trip: Vec<(usize, usize, f64)> = p.m_mat.triplets().collect();
    for (i, j, a) in p.a.triplets() {
        trip.push((j, n + i, -a));
        trip.push((n + i, j, a));
    }
    let mt = SparseMatrix::from_triplets(n + m, n + m, &trip).expect("distinct block entries");
    let mut q = p.q.clone();
    q.extend(p.b.iter().map(|b| -b));
    let mut l = p.l.clone();
    let mut u = p.u.clone();
    for &k in &p.kinds {
        let (lo, hi) = match k {
            ConeRowKind::Ge => (0.0, INF),
            ConeRowKind::Le => (-INF, 0.0),
            ConeRowKind::Eq => (-INF, INF),
        };
        l.push(lo);
        u.push(hi);
    }
    AviProblem::boxed(mt, q, l, u).expect("consistent block dimensions")
}

/// Splits a solution of [`to_mcp`] back into `(z, λ)` and rebuilds the
/// remaining multipliers.
pub fn from_mcp_solution(p: &AviProblem, sol: &Solution) -> Solution {
    let n = p.n();
    Solution::from_primal_dual(p, sol.z[..n].to_vec(), sol.z[n..].to_vec())
}

/// The problem written over `x = Q̄ᵀz` with the lineality component
/// eliminated through the Schur complement.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    /// Orthonormal basis of `lin C`, `n × k`.
    pub q: DMatrix<f64>,
    /// Orthonormal basis of its complement, `n × (n - k)`.
    pub qbar: DMatrix<f64>,
    pub m_tilde: DMatrix<f64>,
    pub q_tilde: DVector<f64>,
    /// `AVI(C̃, q̃, M̃)` with `C̃ = {x : Q̄x ∈ C}`.
    pub problem: AviProblem,
    m_qq: DMatrix<f64>,
    m_qqbar: DMatrix<f64>,
    qt_q: DVector<f64>,
}

impl ReducedProblem {
    pub fn lineality_dim(&self) -> usize {
        self.q.ncols()
    }
}

fn orthonormal_split(n: usize, vectors: &[Vec<f64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = vectors.len();
    if k == 0 {
        return (DMatrix::zeros(n, 0), DMatrix::identity(n, n));
    }
    let stacked = DMatrix::from_fn(n, k + n, |i, j| if j < k { vectors[j][i] } else if i == j - k { 1.0 } else { 0.0 });
    let full = stacked.qr().q();
    (full.columns(0, k).into_owned(), full.columns(k, n - k).into_owned())
}

fn sparse_rows(rows: &[DVector<f64>], ncols: usize) -> SparseMatrix {
    let mut trip = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let scale = r.amax().max(1.0);
        for j in 0..ncols {
            if r[j].abs() > 1e-14 * scale {
                trip.push((i, j, r[j]));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), ncols, &trip).expect("dense rows")
}

/// Reduction onto the complement of `lin C`.
///
/// Fails with `NotInvertibleOnLineality` when `QᵀMQ` is singular.
pub fn reduce_lineality(p: &AviProblem) -> Result<ReducedProblem> {
    let n = p.n();
    let st = phase1(p)?;
    let mut st = promote_free_variables(p, st)?;
    let lin = lineality_basis(p, &mut st)?;
    let (q, qbar) = orthonormal_split(n, &lin.vectors);
    let k = q.ncols();
    let nr = n - k;
    let m = p.m_mat.to_nalgebra();
    let m_qq = q.transpose() * &m * &q;
    let m_qqbar = q.transpose() * &m * &qbar;
    let m_qbarq = qbar.transpose() * &m * &q;
    let m_qbarqbar = qbar.transpose() * &m * &qbar;
    let qv = DVector::from_column_slice(&p.q);
    let qt_q = q.transpose() * &qv;

    let (m_tilde, q_tilde) = if k == 0 {
        (m_qbarqbar, qbar.transpose() * &qv)
    } else {
        let lu = m_qq.clone().lu();
        let sv = m_qq.singular_values();
        let smax = sv.max();
        if sv.min() <= 1e-12 * smax.max(1.0) {
            return Err(Error::NotInvertibleOnLineality { lineality_dim: k });
        }
        let x = lu.solve(&m_qqbar).expect("checked invertible");
        let y = lu.solve(&qt_q).expect("checked invertible");
        (&m_qbarqbar - &m_qbarq * x, qbar.transpose() * &qv - &m_qbarq * y)
    };

    let problem = if k == 0 {
        AviProblem::new(
            SparseMatrix::from_nalgebra(&m_tilde, 0.0),
            q_tilde.iter().copied().collect(),
            p.a.clone(),
            p.b.clone(),
            p.kinds.clone(),
            p.l.clone(),
            p.u.clone(),
        )?
    } else {
        let a = p.a.to_nalgebra() * &qbar;
        let mut rows: Vec<DVector<f64>> = (0..p.m()).map(|i| a.row(i).transpose()).collect();
        let mut b = p.b.clone();
        let mut kinds = p.kinds.clone();
        for j in 0..n {
            let row = qbar.row(j).transpose();
            if p.is_fixed(j) {
                rows.push(row);
                b.push(p.l[j]);
                kinds.push(ConeRowKind::Eq);
                continue;
            }
            if p.l[j].is_finite() {
                rows.push(row.clone());
                b.push(p.l[j]);
                kinds.push(ConeRowKind::Ge);
            }
            if p.u[j].is_finite() {
                rows.push(row);
                b.push(p.u[j]);
                kinds.push(ConeRowKind::Le);
            }
        }
        AviProblem::new(
            SparseMatrix::from_nalgebra(&m_tilde, 0.0),
            q_tilde.iter().copied().collect(),
            sparse_rows(&rows, nr),
            b,
            kinds,
            vec![-INF; nr],
            vec![INF; nr],
        )?
    };
    Ok(ReducedProblem {
        q,
        qbar,
        m_tilde,
        q_tilde,
        problem,
        m_qq,
        m_qqbar,
        qt_q,
    })
}

/// `z = Q̄x + Qy` with `y = -M_QQ⁻¹(M_QQ̄ x + Qᵀq)`.
pub fn lift_solution(rp: &ReducedProblem, x: &[f64]) -> Vec<f64> {
    let xv = DVector::from_column_slice(x);
    let mut z = &rp.qbar * &xv;
    if rp.lineality_dim() > 0 {
        let rhs = -(&rp.m_qqbar * &xv + &rp.qt_q);
        let y = rp.m_qq.clone().lu().solve(&rhs).expect("invertible on the lineality space");
        z += &rp.q * y;
    }
    z.iter().copied().collect()
}

/// Lifted point with multipliers of the original rows taken from the
/// reduced solution.
pub fn lift_full(p: &AviProblem, rp: &ReducedProblem, red: &Solution) -> Solution {
    let z = lift_solution(rp, &red.z);
    Solution::from_primal_dual(p, z, red.lambda[..p.m()].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillInReport {
    pub nnz_original_blocks: usize,
    pub nnz_reduced: usize,
    /// Density of the reduced data over density of the original blocks.
    pub density_ratio: f64,
}

fn density(nnz: usize, rows: usize, cols: usize) -> f64 {
    if rows * cols == 0 {
        0.0
    } else {
        nnz as f64 / (rows * cols) as f64
    }
}

/// Nonzeros of `(M, A)` against those of `(M̃, Ã)` after the reduction.
pub fn fill_in_report(p: &AviProblem) -> Result<FillInReport> {
    let rp = reduce_lineality(p)?;
    let (n, m) = (p.n(), p.m());
    let orig = p.m_mat.nnz_above(FILL_TOL) + p.a.nnz_above(FILL_TOL);
    let r = &rp.problem;
    let red = r.m_mat.nnz_above(FILL_TOL) + r.a.nnz_above(FILL_TOL);
    let d0 = density(orig, n + m, n);
    let d1 = density(red, r.n() + r.m(), r.n());
    Ok(FillInReport {
        nnz_original_blocks: orig,
        nnz_reduced: red,
        density_ratio: if d0 > 0.0 { d1 / d0 } else { 0.0 },
    })
}

/// Fill-in of the condensed matrix `W = HᵀM⁻¹H` against `(M, H)`.
pub fn condensed_fill_in(mass: &SparseMatrix, h: &SparseMatrix) -> Result<(DMatrix<f64>, FillInReport)> {
    let md = mass.to_nalgebra();
    let hd = h.to_nalgebra();
    let chol = md
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("mass matrix is not positive definite".into()))?;
    let w = hd.transpose() * chol.solve(&hd);
    let orig = mass.nnz_above(FILL_TOL) + h.nnz_above(FILL_TOL);
    let red = w.iter().filter(|x| x.abs() > FILL_TOL).count();
    let d0 = density(orig, mass.nrows() + h.ncols(), mass.ncols());
    let d1 = density(red, w.nrows(), w.ncols());
    Ok((
        w,
        FillInReport {
            nnz_original_blocks: orig,
            nnz_reduced: red,
            density_ratio: if d0 > 0.0 { d1 / d0 } else { 0.0 },
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn mcp_block_matrix() {
        let p = AviProblem::new(
            dense(&[&[2.0, 4.0], &[-1.0, -5.0]]),
            vec![0.0; 2],
            dense(&[&[1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Ge],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let mcp = to_mcp(&p);
        assert_eq!(
            mcp.m_mat.to_dense(),
            vec![vec![2.0, 4.0, -1.0], vec![-1.0, -5.0, 1.0], vec![1.0, -1.0, 0.0]]
        );
        assert_eq!(mcp.l[2], 0.0);
        assert_eq!(mcp.u[2], INF);
        assert_eq!(mcp.m(), 0);
    }

    #[test]
    fn mcp_without_rows_is_identity() {
        let p = AviProblem::lcp(SparseMatrix::identity(2), vec![1.0, -1.0]).unwrap();
        assert_eq!(to_mcp(&p), p);
    }

    #[test]
    fn schur_on_diagonal_line() {
        // z1 - z2 ≥ -1 and z1 - z2 ≤ 1 leave lin C = span(1,1)
        let p = AviProblem::new(
            dense(&[&[2.0, 1.0], &[1.0, 2.0]]),
            vec![0.0; 2],
            dense(&[&[1.0, -1.0], &[1.0, -1.0]]),
            vec![-1.0, 1.0],
            vec![ConeRowKind::Ge, ConeRowKind::Le],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let rp = reduce_lineality(&p).unwrap();
        assert_eq!(rp.lineality_dim(), 1);
        assert!((rp.m_qq[(0, 0)] - 3.0).abs() < 1e-12);
        assert_eq!(rp.m_tilde.shape(), (1, 1));
        assert!((rp.m_tilde[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_lineality_lifts_everything() {
        let p = AviProblem::boxed(SparseMatrix::identity(2), vec![1.0, -2.0], vec![-INF; 2], vec![INF; 2]).unwrap();
        let rp = reduce_lineality(&p).unwrap();
        assert_eq!(rp.problem.n(), 0);
        let z = lift_solution(&rp, &[]);
        assert!((z[0] + 1.0).abs() < 1e-12 && (z[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_lineality_block() {
        let p = AviProblem::boxed(dense(&[&[1.0, -1.0], &[-1.0, 1.0]]), vec![0.0; 2], vec![-INF; 2], vec![INF; 2]).unwrap();
        assert!(matches!(reduce_lineality(&p), Err(Error::NotInvertibleOnLineality { lineality_dim: 2 })));
    }
}
