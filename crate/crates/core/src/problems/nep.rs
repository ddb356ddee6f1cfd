//! Nash games where agent `i` minimizes
//! `½ xᵢᵀQᵢxᵢ + xᵢᵀ(Q₋ᵢx₋ᵢ + cᵢ)` over a polyhedron `Xᵢ`. The equilibria are
//! the solutions of the AVI whose `M` has diagonal blocks `Qᵢ` and
//! off-diagonal blocks from `Q₋ᵢ`, with `q = (cᵢ)` and `C = Π Xᵢ`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AviProblem, ConeRowKind};
use crate::sparse::SparseMatrix;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct NepParams {
    pub n_agents: usize,
    /// One size per agent, or a single size for all.
    pub block_sizes: Vec<usize>,
    /// Probability that an entry of an off-diagonal block is nonzero.
    pub coupling: f64,
    /// Rows of each `Xᵢ` besides its box.
    pub rows_per_agent: usize,
    /// Finite boxes on every variable.
    pub compact: bool,
    pub seed: u64,
}

impl Default for NepParams {
    fn default() -> Self {
        Self {
            n_agents: 3,
            block_sizes: vec![3],
            coupling: 0.3,
            rows_per_agent: 2,
            compact: true,
            seed: 0,
        }
    }
}

/// One agent's polyhedron `{x : Ax ⋈ b, l ≤ x ≤ u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSet {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub kinds: Vec<ConeRowKind>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl AgentSet {
    pub fn free(n: usize) -> Self {
        Self {
            a: vec![],
            b: vec![],
            kinds: vec![],
            l: vec![-INF; n],
            u: vec![INF; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NepData {
    /// `Qᵢ`, symmetric positive definite.
    pub q_own: Vec<DMatrix<f64>>,
    /// `coupling[i][j]`: effect of `xⱼ` on the gradient of agent `i`; the
    /// diagonal entries are ignored.
    pub coupling: Vec<Vec<DMatrix<f64>>>,
    pub c: Vec<Vec<f64>>,
    pub sets: Vec<AgentSet>,
}

pub fn assemble_nep(d: &NepData) -> Result<AviProblem> {
    let k = d.q_own.len();
    if d.c.len() != k || d.sets.len() != k || d.coupling.len() != k {
        return Err(Error::InvalidParameter("agent data lengths differ".into()));
    }
    let sizes: Vec<usize> = d.q_own.iter().map(|q| q.nrows()).collect();
    let offs: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let n: usize = sizes.iter().sum();
    let mut trip = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let blk = if i == j { &d.q_own[i] } else { &d.coupling[i][j] };
            if blk.shape() != (sizes[i], sizes[j]) {
                return Err(Error::InvalidParameter(format!("block ({i}, {j}) has shape {:?}", blk.shape())));
            }
            for r in 0..sizes[i] {
                for c in 0..sizes[j] {
                    if blk[(r, c)] != 0.0 {
                        trip.push((offs[i] + r, offs[j] + c, blk[(r, c)]));
                    }
                }
            }
        }
    }
    let m = SparseMatrix::from_triplets(n, n, &trip)?;
    let mut atrip = Vec::new();
    let (mut b, mut kinds, mut l, mut u, mut q) = (vec![], vec![], vec![], vec![], vec![]);
    for (i, s) in d.sets.iter().enumerate() {
        for (row, kind) in s.a.iter().zip(&s.kinds) {
            for (c, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    atrip.push((kinds.len(), offs[i] + c, x));
                }
            }
            kinds.push(*kind);
        }
        b.extend(&s.b);
        l.extend(&s.l);
        u.extend(&s.u);
        q.extend(&d.c[i]);
    }
    let a = SparseMatrix::from_triplets(kinds.len(), n, &atrip)?;
    AviProblem::new(m, q, a, b, kinds, l, u)
}

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random game data; each `Xᵢ` contains its own random center point.
pub fn gen_nep_data(prm: &NepParams) -> Result<NepData> {
    let k = prm.n_agents;
    if k == 0 || prm.block_sizes.is_empty() || prm.block_sizes.contains(&0) {
        return Err(Error::InvalidParameter("agents and block sizes must be positive".into()));
    }
    if prm.block_sizes.len() != 1 && prm.block_sizes.len() != k {
        return Err(Error::InvalidParameter(format!("expected 1 or {k} block sizes")));
    }
    if !(0.0..=1.0).contains(&prm.coupling) {
        return Err(Error::InvalidParameter(format!("coupling density {} outside [0, 1]", prm.coupling)));
    }
    let size = |i: usize| if prm.block_sizes.len() == 1 { prm.block_sizes[0] } else { prm.block_sizes[i] };
    let mut rng = ChaCha8Rng::seed_from_u64(prm.seed);
    let q_own: Vec<DMatrix<f64>> = (0..k).map(|i| spd(&mut rng, size(i))).collect();
    let mut coupling = Vec::new();
    for i in 0..k {
        let mut row = Vec::new();
        for j in 0..k {
            let blk = DMatrix::from_fn(size(i), size(j), |_, _| {
                if i != j && rng.gen_bool(prm.coupling) {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            });
            row.push(blk);
        }
        coupling.push(row);
    }
    let mut c = Vec::new();
    let mut sets = Vec::new();
    for i in 0..k {
        let ni = size(i);
        c.push((0..ni).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let x0: Vec<f64> = (0..ni).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut s = AgentSet::free(ni);
        for _ in 0..prm.rows_per_agent {
            let row: Vec<f64> = (0..ni).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ax: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
            let slack = rng.gen_range(0.1..1.0);
            let kind = if rng.gen_bool(0.5) { ConeRowKind::Ge } else { ConeRowKind::Le };
            s.b.push(match kind {
                ConeRowKind::Ge => ax - slack,
                _ => ax + slack,
            });
            s.a.push(row);
            s.kinds.push(kind);
        }
        for j in 0..ni {
            if prm.compact || rng.gen_bool(0.5) {
                s.l[j] = x0[j] - rng.gen_range(0.5..2.0);
            }
            if prm.compact || rng.gen_bool(0.5) {
                s.u[j] = x0[j] + rng.gen_range(0.5..2.0);
            }
        }
        sets.push(s);
    }
    Ok(NepData { q_own, coupling, c, sets })
}

pub fn gen_nep(prm: &NepParams) -> Result<AviProblem> {
    assemble_nep(&gen_nep_data(prm)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_scalar_agents() {
        let one = || DMatrix::from_element(1, 1, 1.0);
        let half = || DMatrix::from_element(1, 1, 0.5);
        let d = NepData {
            q_own: vec![one(), one()],
            coupling: vec![vec![one(), half()], vec![half(), one()]],
            c: vec![vec![1.0], vec![1.0]],
            sets: vec![AgentSet::free(1), AgentSet::free(1)],
        };
        let p = assemble_nep(&d).unwrap();
        assert_eq!(p.m_mat.to_dense(), vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let z = [-2.0 / 3.0, -2.0 / 3.0];
        let g = p.m_mat.mul_vec(&z);
        assert!(g.iter().zip(&p.q).all(|(a, b)| (a + b).abs() < 1e-15));
    }

    #[test]
    fn uncoupled_game_is_block_diagonal() {
        let prm = NepParams {
            coupling: 0.0,
            ..Default::default()
        };
        let p = gen_nep(&prm).unwrap();
        let m = p.m_mat.to_nalgebra();
        for i in 0..9 {
            for j in 0..9 {
                if i / 3 != j / 3 {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn own_blocks_are_positive_definite() {
        let d = gen_nep_data(&NepParams::default()).unwrap();
        for q in &d.q_own {
            assert_eq!(q, &q.transpose());
            assert!(q.clone().cholesky().is_some());
        }
    }
}
