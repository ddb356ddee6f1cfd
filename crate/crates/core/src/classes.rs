//! Small-scale probes for the matrix classes that decide whether the
//! pivoting method processes an instance: invertibility on `lin C`,
//! copositivity, semimonotonicity, condition (b) of L-matrices, and the
//! `q`-conditions on homogeneous solutions.
//!
//! Throughout, `K = rec C` and its constraints are taken from
//! [`AviProblem::recession`].

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp_start::{lineality_basis, phase1, promote_free_variables};
use crate::problem::AviProblem;
use crate::reform::nnf::{enumerate_faces, Constraints, EXACT_MAX_M, EXACT_MAX_N};
use crate::simplex::{solve_lp, LpProblem, LpResult, LpStatus};
use crate::sparse::SparseMatrix;

const INF: f64 = f64::INFINITY;
/// Relative singular-value threshold for `WᵀMW`.
const SINGULAR_TOL: f64 = 1e-10;
/// A copositivity witness needs `xᵀMx < -COPOS_TOL·‖x‖²`.
const COPOS_TOL: f64 = 1e-10;
/// Size of a complementary solution's component outside `lin K`.
const OUTSIDE_TOL: f64 = 1e-8;
const Q_TOL: f64 = 1e-10;
const CONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// `sampled` marks verdicts that only hold relative to the samples drawn.
    Certified { sampled: bool },
    Refuted(Vec<f64>),
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbeReport {
    pub property: &'static str,
    pub verdict: Verdict,
    /// The `q` for which a semimonotonicity witness was found.
    pub q_witness: Option<Vec<f64>>,
    pub evidence: String,
}

impl ClassProbeReport {
    fn new(property: &'static str, verdict: Verdict, evidence: String) -> Self {
        Self {
            property,
            verdict,
            q_witness: None,
            evidence,
        }
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self.verdict, Verdict::Refuted(_))
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, Verdict::Certified { .. })
    }

    pub fn witness(&self) -> Option<&[f64]> {
        match &self.verdict {
            Verdict::Refuted(x) => Some(x),
            _ => None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dense_lp(rows: &[Vec<f64>], lo: Vec<f64>, hi: Vec<f64>, l: Vec<f64>, u: Vec<f64>, c: Vec<f64>) -> Result<LpResult> {
    let nv = l.len();
    let mut trip = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (j, &a) in r.iter().enumerate() {
            if a != 0.0 {
                trip.push((i, j, a));
            }
        }
    }
    let a = SparseMatrix::from_triplets(rows.len(), nv, &trip)?;
    solve_lp(&LpProblem::ranged(a, lo, hi, l, u, c))
}

/// Orthonormal basis of the null space of `rows`, plus their rank.
fn null_space(rows: &[&Vec<f64>], n: usize) -> (DMatrix<f64>, usize) {
    if rows.is_empty() {
        return (DMatrix::identity(n, n), 0);
    }
    let g = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let eig = (g.transpose() * &g).symmetric_eigen();
    let top = eig.eigenvalues.amax().max(1.0);
    let null: Vec<usize> = (0..n).filter(|&j| eig.eigenvalues[j] <= 1e-12 * top).collect();
    let basis = DMatrix::from_fn(n, null.len(), |i, k| eig.eigenvectors[(i, null[k])]);
    (basis, n - null.len())
}

fn check_caps(p: &AviProblem) -> Result<()> {
    if p.n() > EXACT_MAX_N || p.m() > EXACT_MAX_M {
        return Err(Error::SizeCapExceeded(format!(
            "face enumeration needs n ≤ {EXACT_MAX_N} and m ≤ {EXACT_MAX_M}, got n = {} and m = {}",
            p.n(),
            p.m()
        )));
    }
    Ok(())
}

/// Generators of `rec C`: `±` an orthonormal basis of its lineality space
/// together with one ray per edge of the pointed part.
pub fn cone_generators(p: &AviProblem) -> Result<Vec<Vec<f64>>> {
    let rec = p.recession();
    let n = p.n();
    let (cons, faces) = enumerate_faces(&rec)?;
    let all: Vec<&Vec<f64>> = cons.rows.iter().collect();
    let (lin, _) = null_space(&all, n);
    let k = lin.ncols();
    let mut out = Vec::new();
    for c in 0..k {
        let v: Vec<f64> = lin.column(c).iter().copied().collect();
        out.push(v.iter().map(|x| -x).collect());
        out.push(v);
    }
    let proj = DMatrix::identity(n, n) - &lin * lin.transpose();
    for face in &faces {
        let tight: Vec<&Vec<f64>> = face.iter().map(|&i| &cons.rows[i]).collect();
        let (nb, rank) = null_space(&tight, n);
        if rank + k + 1 != n {
            continue;
        }
        let cand = &proj * nb;
        let best = (0..cand.ncols())
            .max_by(|&a, &b| cand.column(a).norm().total_cmp(&cand.column(b).norm()))
            .expect("edge has a direction");
        let d = cand.column(best).normalize();
        let mut d: Vec<f64> = d.iter().copied().collect();
        if cons.rows.iter().any(|g| dot(g, &d) < -CONE_TOL) {
            d.iter_mut().for_each(|x| *x = -*x);
        }
        out.push(d);
    }
    Ok(out)
}

/// Decides whether `M` restricted to `lin C` is invertible.
pub fn invertible_on_lineality(p: &AviProblem) -> Result<ClassProbeReport> {
    const NAME: &str = "invertible_on_lineality";
    let st = phase1(p)?;
    let mut st = promote_free_variables(p, st)?;
    let lin = lineality_basis(p, &mut st)?;
    let k = lin.dim();
    if k == 0 {
        return Ok(ClassProbeReport::new(NAME, Verdict::Certified { sampled: false }, "dim=0".into()));
    }
    let n = p.n();
    let w = DMatrix::from_fn(n, k, |i, j| lin.vectors[j][i]).qr().q();
    let g = w.transpose() * p.m_mat.to_nalgebra() * &w;
    let svd = g.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (imin, smin) = svd.singular_values.argmin();
    let smax = svd.singular_values.max();
    let evidence = format!("dim={k} sigma_min={smin:.3e} sigma_max={smax:.3e}");
    if smin <= SINGULAR_TOL * smax.max(1.0) {
        let c = v_t.row(imin).transpose();
        let v = &w * c;
        return Ok(ClassProbeReport::new(NAME, Verdict::Refuted(v.iter().copied().collect()), evidence));
    }
    Ok(ClassProbeReport::new(NAME, Verdict::Certified { sampled: false }, evidence))
}

/// Euclidean projection onto the unit simplex.
fn project_simplex(y: &mut [f64]) {
    let mut s: Vec<f64> = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, &x) in s.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    y.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
}

/// Searches `K = cone(gens)` for `x` with `xᵀMx < 0`.
///
/// Random points of the cone are tried first, then projected gradient
/// descent of `θᵀ(GᵀMG)θ` over the simplex from the best of them. Never
/// certifies.
pub fn copositive_refute(m: &DMatrix<f64>, gens: &[Vec<f64>], budget: usize, seed: u64) -> ClassProbeReport {
    const NAME: &str = "copositive";
    let n = m.nrows();
    let k = gens.len();
    if k == 0 {
        return ClassProbeReport::new(NAME, Verdict::Inconclusive, "samples=0".into());
    }
    let g = DMatrix::from_fn(n, k, |i, j| gens[j][i]);
    let ms = (m + m.transpose()) * 0.5;
    let s = g.transpose() * &ms * &g;
    let point = |th: &DVector<f64>| -> (Vec<f64>, f64) {
        let x = &g * th;
        let nx = x.norm_squared();
        let val = (x.transpose() * &ms * &x)[(0, 0)];
        let ratio = if nx > 0.0 { val / nx } else { 0.0 };
        (x.iter().copied().collect(), ratio)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut tried = 0usize;
    let mut best = INF;
    let mut visit = |th: DVector<f64>, starts: &mut Vec<(f64, DVector<f64>)>| -> Option<Vec<f64>> {
        let (x, ratio) = point(&th);
        best = best.min(ratio);
        if ratio < -COPOS_TOL {
            return Some(x);
        }
        starts.push((ratio, th));
        None
    };
    for j in 0..k.min(budget.max(k)) {
        tried += 1;
        if let Some(x) = visit(DVector::from_fn(k, |i, _| f64::from(u8::from(i == j))), &mut starts) {
            return ClassProbeReport::new(NAME, Verdict::Refuted(x), format!("samples={tried} vertex"));
        }
    }
    while tried < budget {
        tried += 1;
        let mut th = DVector::from_fn(k, |_, _| -(1.0 - rng.gen::<f64>()).ln());
        th /= th.sum();
        if let Some(x) = visit(th, &mut starts) {
            return ClassProbeReport::new(NAME, Verdict::Refuted(x), format!("samples={tried} random"));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step = 0.5 / s.norm().max(1e-12);
    for (_, th0) in starts.iter().take(8) {
        let mut th = th0.clone();
        for _ in 0..300 {
            let grad = (&s + s.transpose()) * &th;
            let mut y: Vec<f64> = (&th - grad * step).iter().copied().collect();
            project_simplex(&mut y);
            th = DVector::from_vec(y);
        }
        if let Some(x) = visit(th, &mut Vec::new()) {
            return ClassProbeReport::new(NAME, Verdict::Refuted(x), format!("samples={tried} descent"));
        }
    }
    ClassProbeReport::new(NAME, Verdict::Inconclusive, format!("samples={tried} min_ratio={best:.3e}"))
}

/// Searches for a complementary solution of `(K, q, M)` on the face of `K`
/// with tight set `face` that lies outside `lin K`. Returns the solution.
fn gcp_outside_lineality(
    cons: &Constraints,
    m: &DMatrix<f64>,
    q: &[f64],
    face: &BTreeSet<usize>,
) -> Result<Option<Vec<f64>>> {
    let n = cons.n;
    let on_face: Vec<usize> = face.iter().copied().collect();
    let outside: Vec<usize> = (0..cons.len()).filter(|k| !face.contains(k) && !cons.equality[*k]).collect();
    if outside.is_empty() {
        return Ok(None);
    }
    let nv = n + on_face.len();
    let mut rows = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (k, g) in cons.rows.iter().enumerate() {
        let mut r = g.clone();
        r.resize(nv, 0.0);
        rows.push(r);
        lo.push(0.0);
        hi.push(if face.contains(&k) || cons.equality[k] { 0.0 } else { INF });
    }
    // Mz - Σ μ_k g_k = -q
    for i in 0..n {
        let mut r: Vec<f64> = (0..n).map(|j| m[(i, j)]).collect();
        r.extend(on_face.iter().map(|&k| -cons.rows[k][i]));
        rows.push(r);
        lo.push(-q[i]);
        hi.push(-q[i]);
    }
    let mut c = vec![0.0; nv];
    let mut cap = vec![0.0; nv];
    for &k in &outside {
        for j in 0..n {
            cap[j] += cons.rows[k][j];
            c[j] -= cons.rows[k][j];
        }
    }
    rows.push(cap);
    lo.push(-INF);
    hi.push(1.0);
    let mut l = vec![-INF; nv];
    let u = vec![INF; nv];
    for (a, &k) in on_face.iter().enumerate() {
        if !cons.equality[k] {
            l[n + a] = 0.0;
        }
    }
    let res = dense_lp(&rows, lo, hi, l, u, c)?;
    match res.status {
        LpStatus::Optimal if -res.objective > OUTSIDE_TOL => Ok(Some(res.x[..n].to_vec())),
        _ => Ok(None),
    }
}

/// Samples `q` from the relative interior of `K^D` and looks for
/// complementary solutions outside `lin K`.
///
/// Each sample is decided exactly by one LP per face of `K`, so the
/// verdict is only relative to the drawn samples.
pub fn semimonotone_probe(p: &AviProblem, samples: usize, seed: u64) -> Result<ClassProbeReport> {
    const NAME: &str = "semimonotone";
    check_caps(p)?;
    let rec = p.recession();
    let (cons, faces) = enumerate_faces(&rec)?;
    let m = p.m_mat.to_nalgebra();
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failed = 0usize;
    for s in 0..samples {
        let mut q = vec![0.0; n];
        for (k, g) in cons.rows.iter().enumerate() {
            let w = if cons.equality[k] { rng.gen_range(-1.0..1.0) } else { rng.gen_range(0.1..1.0) };
            for j in 0..n {
                q[j] += w * g[j];
            }
        }
        for face in &faces {
            match gcp_outside_lineality(&cons, &m, &q, face) {
                Ok(Some(z)) => {
                    let mut rep = ClassProbeReport::new(NAME, Verdict::Refuted(z), format!("sample={s} faces={}", faces.len()));
                    rep.q_witness = Some(q);
                    return Ok(rep);
                }
                Ok(None) => {}
                Err(_) => {
                    failed += 1;
                    break;
                }
            }
        }
    }
    let evidence = format!("samples={samples} failed={failed} faces={}", faces.len());
    if failed > 0 {
        return Ok(ClassProbeReport::new(NAME, Verdict::Inconclusive, evidence));
    }
    Ok(ClassProbeReport::new(NAME, Verdict::Certified { sampled: true }, evidence))
}

/// Outcome of the condition (b) check for one `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionB {
    Holds { z_prime: Option<Vec<f64>> },
    Fails,
}

/// Condition (b) of L-matrices at a given `z` with `M = p.m_mat` and
/// `K = rec C`: is there `z' ≠ 0` in the smallest face of `K` containing
/// `z` with `-Mᵀz'` in the smallest face of `K^D` containing `Mz`?
pub fn lmatrix_condition_b_check_small(p: &AviProblem, z: &[f64]) -> Result<ConditionB> {
    check_caps(p)?;
    let n = p.n();
    let cons = Constraints::new(&p.recession());
    let zn = norm(z);
    if zn == 0.0 {
        return Ok(ConditionB::Holds { z_prime: None });
    }
    let y = p.m_mat.mul_vec(z);
    let scale = zn * (1.0 + norm(&y));
    if cons.rows.iter().enumerate().any(|(k, g)| {
        let v = dot(g, z);
        v < -CONE_TOL * zn || (cons.equality[k] && v.abs() > CONE_TOL * zn)
    }) {
        return Err(Error::InvalidParameter("z is not in rec C".into()));
    }
    if dot(z, &y).abs() > CONE_TOL * scale {
        return Err(Error::InvalidParameter("zᵀMz is not zero".into()));
    }
    // y ∈ K^D iff min yᵀx over K ∩ [-1, 1]ⁿ is zero
    let hi: Vec<f64> = cons.equality.iter().map(|&e| if e { 0.0 } else { INF }).collect();
    let res = dense_lp(&cons.rows, vec![0.0; cons.len()], hi, vec![-1.0; n], vec![1.0; n], y.clone())?;
    if matches!(res.status, LpStatus::Optimal) && res.objective < -CONE_TOL * (1.0 + norm(&y)) {
        return Err(Error::InvalidParameter("Mz is not in the dual of rec C".into()));
    }

    let tight_z: BTreeSet<usize> = (0..cons.len()).filter(|&k| dot(&cons.rows[k], z).abs() <= CONE_TOL * zn).collect();
    // tight set of the face K ∩ y^⊥, whose normal cone is the smallest
    // face of K^D containing y
    let tight_y = if norm(&y) == 0.0 {
        cons.closure(&BTreeSet::new())?.unwrap_or_default()
    } else {
        let mut ext = cons.clone();
        let s = y.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        ext.rows.push(y.iter().map(|x| x / s).collect());
        ext.rhs.push(0.0);
        ext.equality.push(true);
        let mut t = ext.closure(&BTreeSet::new())?.unwrap_or_default();
        t.remove(&cons.len());
        t
    };
    let mu: Vec<usize> = tight_y.iter().copied().collect();
    let nv = n + mu.len();
    let mt = p.m_mat.transpose().to_nalgebra();
    let mut rows = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (k, g) in cons.rows.iter().enumerate() {
        let mut r = g.clone();
        r.resize(nv, 0.0);
        rows.push(r);
        lo.push(0.0);
        hi.push(if tight_z.contains(&k) || cons.equality[k] { 0.0 } else { INF });
    }
    // -Mᵀz' - Σ μ_k g_k = 0
    for i in 0..n {
        let mut r: Vec<f64> = (0..n).map(|j| -mt[(i, j)]).collect();
        r.extend(mu.iter().map(|&k| -cons.rows[k][i]));
        rows.push(r);
        lo.push(0.0);
        hi.push(0.0);
    }
    let mut l0 = vec![-INF; nv];
    for (a, &k) in mu.iter().enumerate() {
        if !cons.equality[k] {
            l0[n + a] = 0.0;
        }
    }
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut l = l0.clone();
            let mut u = vec![INF; nv];
            l[j] = sign;
            u[j] = sign;
            let res = dense_lp(&rows, lo.clone(), hi.clone(), l, u, vec![0.0; nv])?;
            if matches!(res.status, LpStatus::Optimal) {
                return Ok(ConditionB::Holds {
                    z_prime: Some(res.x[..n].to_vec()),
                });
            }
        }
    }
    Ok(ConditionB::Fails)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QCondition {
    Holds,
    /// `value` is the violating minimum, `-∞` when unbounded.
    Fails { z: Vec<f64>, value: f64 },
}

impl QCondition {
    pub fn holds(&self) -> bool {
        matches!(self, QCondition::Holds)
    }
}

/// `zᵀq ≥ 0` for each candidate homogeneous solution `z`.
pub fn q_condition_copositive(q: &[f64], candidates: &[Vec<f64>]) -> QCondition {
    for z in candidates {
        let v = dot(z, q);
        if v < -Q_TOL * norm(z).max(1.0) {
            return QCondition::Fails { z: z.clone(), value: v };
        }
    }
    QCondition::Holds
}

/// `zᵀ(Mz' + q) ≥ 0` for every `z'` in `C` and each candidate `z`, decided
/// by minimizing the linear function over `C`.
pub fn q_condition_lmatrix(p: &AviProblem, candidates: &[Vec<f64>]) -> Result<QCondition> {
    let mt = p.m_mat.transpose();
    for z in candidates {
        let mut lp = LpProblem::feasibility(p);
        lp.c = mt.mul_vec(z);
        let res = solve_lp(&lp)?;
        let value = match res.status {
            LpStatus::Optimal => res.objective + dot(z, &p.q),
            LpStatus::Unbounded => -INF,
            LpStatus::Infeasible(cert) => return Err(Error::Infeasible(cert)),
        };
        if value < -Q_TOL * norm(z).max(1.0) * (1.0 + norm(&p.q)) {
            return Ok(QCondition::Fails { z: z.clone(), value });
        }
    }
    Ok(QCondition::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ConeRowKind;

    fn lcp(rows: &[Vec<f64>]) -> AviProblem {
        let n = rows.len();
        AviProblem::lcp(SparseMatrix::from_dense(rows), vec![0.0; n]).unwrap()
    }

    /// `M = [[I₂, 0], [1ᵀ, 0]]`, copositive on the orthant but not an
    /// L-matrix there.
    fn book_example() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]]
    }

    #[test]
    fn lineality_invertibility() {
        let p = lcp(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(invertible_on_lineality(&p).unwrap().is_certified());

        let p = AviProblem::new(
            SparseMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]),
            vec![0.0; 2],
            SparseMatrix::from_dense(&[vec![1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Ge],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let rep = invertible_on_lineality(&p).unwrap();
        let v = rep.witness().unwrap();
        assert!((v[0] - v[1]).abs() < 1e-12 && v[0].abs() > 0.5);

        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            SparseMatrix::from_dense(&[vec![1.0, -1.0]]),
            vec![0.0],
            vec![ConeRowKind::Ge],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        assert!(invertible_on_lineality(&p).unwrap().is_certified());
    }

    #[test]
    fn simplex_projection() {
        let mut y = vec![0.3, 2.0, -1.0];
        project_simplex(&mut y);
        assert_eq!(y, vec![0.0, 1.0, 0.0]);
        let mut y = vec![0.5, 0.5];
        project_simplex(&mut y);
        assert_eq!(y, vec![0.5, 0.5]);
    }

    #[test]
    fn copositivity() {
        let orthant2 = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let rep = copositive_refute(&DMatrix::identity(2, 2), &orthant2, 200, 1);
        assert_eq!(rep.verdict, Verdict::Inconclusive);

        let rep = copositive_refute(&-DMatrix::identity(1, 1), &[vec![1.0]], 10, 1);
        assert_eq!(rep.verdict, Verdict::Refuted(vec![1.0]));

        let m = DMatrix::from_fn(3, 3, |i, j| book_example()[i][j]);
        let gens = cone_generators(&lcp(&book_example())).unwrap();
        assert_eq!(gens.len(), 3);
        assert_eq!(copositive_refute(&m, &gens, 500, 2).verdict, Verdict::Inconclusive);

        // negative only strictly inside the cone: [[1,-3],[-3,1]] at (1,1)
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, -3.0, 1.0]);
        let rep = copositive_refute(&m, &orthant2, 50, 3);
        let x = rep.witness().unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(x[0] * x[0] + x[1] * x[1] - 6.0 * x[0] * x[1] < 0.0);
    }

    #[test]
    fn generators_with_lines() {
        // {z : z1 ≥ 0}, lin = span(e2)
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            SparseMatrix::from_dense(&[vec![1.0, 0.0]]),
            vec![0.0],
            vec![ConeRowKind::Ge],
            vec![-INF; 2],
            vec![INF; 2],
        )
        .unwrap();
        let mut gens = cone_generators(&p).unwrap();
        gens.iter_mut().flatten().for_each(|x| *x = (*x * 1e9).round() / 1e9 + 0.0);
        assert_eq!(gens.len(), 3);
        assert!(gens.contains(&vec![1.0, 0.0]));
        assert!(gens.iter().filter(|g| g[0] == 0.0 && g[1].abs() == 1.0).count() == 2);
    }

    #[test]
    fn semimonotonicity() {
        let rep = semimonotone_probe(&lcp(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 20, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified { sampled: true });

        let rep = semimonotone_probe(&lcp(&[vec![-1.0]]), 5, 1).unwrap();
        let z = rep.witness().unwrap()[0];
        let q = rep.q_witness.as_ref().unwrap()[0];
        assert!(z > 0.0 && (q - z).abs() < 1e-9, "Mz + q = 0 at z = q");

        let rep = semimonotone_probe(&lcp(&[vec![0.0, 0.0], vec![0.0, 0.0]]), 20, 1).unwrap();
        assert!(rep.is_certified());
    }

    #[test]
    fn condition_b() {
        let p = lcp(&book_example());
        assert_eq!(lmatrix_condition_b_check_small(&p, &[0.0, 0.0, 2.5]).unwrap(), ConditionB::Fails);

        let p = lcp(&[vec![0.0]]);
        match lmatrix_condition_b_check_small(&p, &[1.0]).unwrap() {
            ConditionB::Holds { z_prime: Some(zp) } => assert!(zp[0] > 0.0),
            other => panic!("{other:?}"),
        }

        let p = lcp(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(lmatrix_condition_b_check_small(&p, &[0.0, 0.0]).unwrap(), ConditionB::Holds { z_prime: None });
        assert!(matches!(lmatrix_condition_b_check_small(&p, &[1.0, 0.0]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn q_conditions() {
        let z = vec![vec![0.0, 0.0, 0.7]];
        assert!(q_condition_copositive(&[0.0, 0.0, 1.0], &z).holds());
        assert!(!q_condition_copositive(&[0.0, 0.0, -1.0], &z).holds());

        // C = [0, 1]³ so the minimum over C is attained
        let p = AviProblem::boxed(SparseMatrix::from_dense(&book_example()), vec![0.0, 0.0, 1.0], vec![0.0; 3], vec![1.0; 3])
            .unwrap();
        assert!(q_condition_lmatrix(&p, &z).unwrap().holds());
        let flipped = p.with_affine(p.m_mat.clone(), vec![0.0, 0.0, -1.0]).unwrap();
        match q_condition_lmatrix(&flipped, &z).unwrap() {
            QCondition::Fails { value, .. } => assert!((value + 0.7).abs() < 1e-12),
            QCondition::Holds => panic!("expected failure"),
        }
    }
}
