//! Basis factorization with column replacement.
//!
//! The basis is factored densely (LU with partial row pivoting, columns in
//! their given order) and updated in product form. Solves verify their
//! residual and refactorize once if it is too large.

use thiserror::Error;

use crate::sparse::SparseVector;

/// The basis is singular; `0` is the first column found to depend on the
/// columns before it (or the replaced position for a failed update).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("singular basis at column {0}")]
pub struct SingularBasis(pub usize);

/// Updates before a forced refactorization.
pub const DEFAULT_UPDATE_CAP: usize = 50;

const PIVOT_REL_TOL: f64 = 1e-11;
const ETA_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct DenseLu {
    k: usize,
    /// Row-major, L (unit, below diagonal) and U packed.
    lu: Vec<f64>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(k: usize, cols: &[SparseVector]) -> Result<Self, SingularBasis> {
        let mut a = vec![0.0; k * k];
        let mut col_scale = vec![0.0f64; k];
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter() {
                a[i * k + j] = v;
                col_scale[j] = col_scale[j].max(v.abs());
            }
        }
        let mut perm: Vec<usize> = (0..k).collect();
        for j in 0..k {
            let mut best = j;
            let mut best_abs = a[j * k + j].abs();
            for i in j + 1..k {
                let v = a[i * k + j].abs();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs <= PIVOT_REL_TOL * col_scale[j].max(1.0) || col_scale[j] == 0.0 {
                return Err(SingularBasis(j));
            }
            if best != j {
                for c in 0..k {
                    a.swap(j * k + c, best * k + c);
                }
                perm.swap(j, best);
            }
            let piv = a[j * k + j];
            for i in j + 1..k {
                let f = a[i * k + j] / piv;
                if f == 0.0 {
                    continue;
                }
                a[i * k + j] = f;
                for c in j + 1..k {
                    a[i * k + c] -= f * a[j * k + c];
                }
            }
        }
        Ok(Self { k, lu: a, perm })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..k {
            let mut s = x[i];
            for c in 0..i {
                s -= self.lu[i * k + c] * x[c];
            }
            x[i] = s;
        }
        for i in (0..k).rev() {
            let mut s = x[i];
            for c in i + 1..k {
                s -= self.lu[i * k + c] * x[c];
            }
            x[i] = s / self.lu[i * k + i];
        }
        x
    }

    fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y1 = rhs, Lᵀ y2 = y1, then unpermute.
        let k = self.k;
        let mut y = rhs.to_vec();
        for i in 0..k {
            let mut s = y[i];
            for c in 0..i {
                s -= self.lu[c * k + i] * y[c];
            }
            y[i] = s / self.lu[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for c in i + 1..k {
                s -= self.lu[c * k + i] * y[c];
            }
            y[i] = s;
        }
        let mut out = vec![0.0; k];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = y[i];
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    d: Vec<f64>,
}

/// Factorization of a square basis `𝐁` given by sparse columns.
#[derive(Debug, Clone)]
pub struct BasisFactorization {
    k: usize,
    cols: Vec<SparseVector>,
    lu: DenseLu,
    etas: Vec<Eta>,
    cond: f64,
    update_cap: usize,
    refactorizations: usize,
}

pub fn factorize(k: usize, cols: Vec<SparseVector>) -> Result<BasisFactorization, SingularBasis> {
    BasisFactorization::new(k, cols)
}

impl BasisFactorization {
    pub fn new(k: usize, cols: Vec<SparseVector>) -> Result<Self, SingularBasis> {
        assert_eq!(cols.len(), k, "basis must be square");
        for c in &cols {
            assert!(c.indices.iter().all(|&i| i < k), "column entry out of range");
        }
        let lu = DenseLu::factor(k, &cols)?;
        let mut f = Self {
            k,
            cols,
            lu,
            etas: Vec::new(),
            cond: 1.0,
            update_cap: DEFAULT_UPDATE_CAP,
            refactorizations: 0,
        };
        f.cond = f.estimate_condition();
        Ok(f)
    }

    pub fn with_update_cap(mut self, cap: usize) -> Self {
        self.update_cap = cap.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn columns(&self) -> &[SparseVector] {
        &self.cols
    }

    pub fn update_count(&self) -> usize {
        self.etas.len()
    }

    pub fn refactorizations(&self) -> usize {
        self.refactorizations
    }

    /// 1-norm condition estimate taken at the last refactorization.
    pub fn condition_estimate(&self) -> f64 {
        self.cond
    }

    /// Refactors from the current columns, dropping all updates.
    pub fn refactorize(&mut self) -> Result<(), SingularBasis> {
        self.lu = DenseLu::factor(self.k, &self.cols)?;
        self.etas.clear();
        self.refactorizations += 1;
        self.cond = self.estimate_condition();
        Ok(())
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(rhs);
        for e in &self.etas {
            let xp = x[e.pos] / e.d[e.pos];
            for (i, di) in e.d.iter().enumerate() {
                if i != e.pos {
                    x[i] -= di * xp;
                }
            }
            x[e.pos] = xp;
        }
        x
    }

    fn raw_solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let mut z = rhs.to_vec();
        for e in self.etas.iter().rev() {
            let mut s = z[e.pos];
            for (i, di) in e.d.iter().enumerate() {
                if i != e.pos {
                    s -= di * z[i];
                }
            }
            z[e.pos] = s / e.d[e.pos];
        }
        self.lu.solve_transpose(&z)
    }

    /// `𝐁x` from the stored columns.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.k];
        for (j, c) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for (i, v) in c.iter() {
                    y[i] += v * x[j];
                }
            }
        }
        y
    }

    /// `𝐁ᵀy` from the stored columns.
    pub fn mul_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| c.dot_dense(y)).collect()
    }

    fn tolerance(&self, rhs: &[f64]) -> f64 {
        let norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1e-10 * self.k.max(1) as f64 * (1.0 + norm)
    }

    fn residual(&self, x: &[f64], rhs: &[f64], transpose: bool) -> (Vec<f64>, f64) {
        let bx = if transpose { self.mul_transpose(x) } else { self.mul(x) };
        let r: Vec<f64> = rhs.iter().zip(&bx).map(|(a, b)| a - b).collect();
        let n = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (r, n)
    }

    fn checked_solve(&mut self, rhs: &[f64], transpose: bool) -> Result<Vec<f64>, SingularBasis> {
        assert_eq!(rhs.len(), self.k, "rhs length must equal basis dimension");
        let solve = |f: &Self, r: &[f64]| {
            if transpose {
                f.raw_solve_transpose(r)
            } else {
                f.raw_solve(r)
            }
        };
        let mut x = solve(self, rhs);
        let tol = self.tolerance(rhs);
        let (_, err) = self.residual(&x, rhs, transpose);
        if err <= tol {
            return Ok(x);
        }
        if !self.etas.is_empty() {
            self.refactorize()?;
            x = solve(self, rhs);
        }
        let (r, err) = self.residual(&x, rhs, transpose);
        if err > tol {
            let dx = solve(self, &r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Ok(x)
    }

    /// Solves `𝐁x = rhs`.
    pub fn solve_forward(&mut self, rhs: &[f64]) -> Result<Vec<f64>, SingularBasis> {
        self.checked_solve(rhs, false)
    }

    /// Solves `𝐁ᵀy = rhs`.
    pub fn solve_transpose(&mut self, rhs: &[f64]) -> Result<Vec<f64>, SingularBasis> {
        self.checked_solve(rhs, true)
    }

    pub fn solve_forward_sparse(&mut self, rhs: &SparseVector) -> Result<Vec<f64>, SingularBasis> {
        let d = rhs.to_dense(self.k);
        self.solve_forward(&d)
    }

    /// Replaces column `pos` with `col`. On error the factorization is left
    /// exactly as before the call.
    pub fn replace_column(&mut self, pos: usize, col: SparseVector) -> Result<(), SingularBasis> {
        assert!(pos < self.k, "position out of range");
        let dense = col.to_dense(self.k);
        let d = self.raw_solve(&dense);
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let stable = d[pos].abs() > ETA_REL_TOL * dmax.max(1.0);

        let old = std::mem::replace(&mut self.cols[pos], col);
        if stable && self.etas.len() < self.update_cap {
            self.etas.push(Eta { pos, d });
            return Ok(());
        }
        let saved = (self.lu.clone(), std::mem::take(&mut self.etas), self.cond);
        match self.refactorize() {
            Ok(()) => Ok(()),
            Err(_) => {
                self.cols[pos] = old;
                self.lu = saved.0;
                self.etas = saved.1;
                self.cond = saved.2;
                Err(SingularBasis(pos))
            }
        }
    }

    fn norm1(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.values.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Hager's estimate of `‖𝐁⁻¹‖₁` times `‖𝐁‖₁`.
    fn estimate_condition(&self) -> f64 {
        let k = self.k;
        if k == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / k as f64; k];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.raw_solve(&x);
            let ny: f64 = y.iter().map(|v| v.abs()).sum();
            let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.raw_solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, &v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            est = ny;
            if zmax <= zx {
                break;
            }
            x = vec![0.0; k];
            x[jmax] = 1.0;
        }
        est * self.norm1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    fn identity(k: usize) -> Vec<SparseVector> {
        (0..k).map(|i| SparseVector::unit(i, 1.0)).collect()
    }

    #[test]
    fn identity_condition_is_one() {
        let f = factorize(3, identity(3)).unwrap();
        assert!((f.condition_estimate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dependent_columns_reported() {
        let e = factorize(2, vec![col(&[1.0, 0.0]), col(&[2.0, 0.0])]).unwrap_err();
        assert_eq!(e, SingularBasis(1));
    }

    #[test]
    fn small_solves() {
        // columns of [[2,1],[0,1]]
        let mut f = factorize(2, vec![col(&[2.0, 0.0]), col(&[1.0, 1.0])]).unwrap();
        assert_eq!(f.solve_forward(&[3.0, 1.0]).unwrap(), vec![1.0, 1.0]);

        let mut f = factorize(2, identity(2)).unwrap();
        assert_eq!(f.solve_forward(&[5.0, -2.0]).unwrap(), vec![5.0, -2.0]);

        let mut f = factorize(2, vec![col(&[2.0, 0.0]), col(&[0.0, 4.0])]).unwrap();
        assert_eq!(f.solve_forward(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);

        // [[1,1],[0,1]]ᵀ y = (1,2) → y = (1,1)
        let mut f = factorize(2, vec![col(&[1.0, 0.0]), col(&[1.0, 1.0])]).unwrap();
        assert_eq!(f.solve_transpose(&[1.0, 2.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn replace_examples() {
        let mut f = factorize(2, identity(2)).unwrap();
        f.replace_column(0, col(&[2.0, 0.0])).unwrap();
        assert_eq!(f.solve_forward(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let mut f = factorize(2, identity(2)).unwrap();
        assert!(f.replace_column(0, col(&[0.0, 1.0])).is_err());
        // state untouched
        assert_eq!(f.solve_forward(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn update_chain_matches_fresh() {
        let start = vec![col(&[4.0, 1.0, 0.0]), col(&[0.0, 3.0, 1.0]), col(&[1.0, 0.0, 2.0])];
        let mut f = factorize(3, start.clone()).unwrap();
        let news = [(1, col(&[1.0, 1.0, 1.0])), (0, col(&[0.0, 2.0, -1.0])), (2, col(&[5.0, 0.0, 1.0]))];
        let mut cols = start;
        for (p, c) in news.iter().cloned() {
            cols[p] = c.clone();
            f.replace_column(p, c).unwrap();
        }
        let mut g = factorize(3, cols).unwrap();
        let rhs = [1.0, -2.0, 0.5];
        let a = f.solve_forward(&rhs).unwrap();
        let b = g.solve_forward(&rhs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        let a = f.solve_transpose(&rhs).unwrap();
        let b = g.solve_transpose(&rhs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
