//! Random problems over compact sets.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    /// The symmetric part has at least one negative eigenvalue.
    Indefinite,
    /// The symmetric part is positive definite.
    Monotone,
    /// Independent uniform entries.
    Uniform,
}

impl FromStr for Spectrum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indefinite" => Ok(Self::Indefinite),
            "monotone" => Ok(Self::Monotone),
            "uniform" => Ok(Self::Uniform),
            _ => Err(Error::InvalidParameter(format!("unknown spectrum {s:?}"))),
        }
    }
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

fn matrix(rng: &mut ChaCha8Rng, n: usize, spectrum: Spectrum) -> DMatrix<f64> {
    if spectrum == Spectrum::Uniform {
        return DMatrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0));
    }
    let mut ev: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
    if spectrum == Spectrum::Indefinite && n > 0 {
        for (k, e) in ev.iter_mut().enumerate() {
            if k == 0 || rng.gen_bool(0.3) {
                *e = -rng.gen_range(0.1..3.0);
            }
        }
    }
    let q = random_orthogonal(rng, n);
    let skew = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &q * DMatrix::from_diagonal(&ev.into()) * q.transpose() + (&skew - skew.transpose())
}

/// Finite boxes around the origin plus `m` random rows the origin
/// satisfies.
pub fn gen_boxed_random(n: usize, m: usize, seed: u64, spectrum: Spectrum) -> Result<AviProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mm = matrix(&mut rng, n, spectrum);
    let q = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let l = (0..n).map(|_| -rng.gen_range(0.5..2.0)).collect();
    let u = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut kinds = Vec::new();
    for _ in 0..m {
        rows.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
        let kind = [ConeRowKind::Ge, ConeRowKind::Le, ConeRowKind::Eq][rng.gen_range(0..3)];
        b.push(match kind {
            ConeRowKind::Ge => -rng.gen_range(0.1..1.0),
            ConeRowKind::Le => rng.gen_range(0.1..1.0),
            ConeRowKind::Eq => 0.0,
        });
        kinds.push(kind);
    }
    let a = if m == 0 { SparseMatrix::zeros(0, n) } else { SparseMatrix::from_dense(&rows) };
    AviProblem::new(SparseMatrix::from_nalgebra(&mm, 0.0), q, a, b, kinds, l, u)
}
