use avi_core::error::Error;
use avi_core::pivot::{lemke_solve, SolveOptions, SolveStatus};
use avi_core::problem::{kkt_residual, AviProblem, ConeRowKind};
use avi_core::reform::{
    from_mcp_solution, lift_full, nnf_exact, nnf_mcp_product, nnf_upper_bound, reduce_lineality, to_mcp,
};
use avi_core::sparse::SparseMatrix;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

fn diamond() -> AviProblem {
    let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]]);
    AviProblem::new(
        SparseMatrix::identity(2),
        vec![0.0; 2],
        a,
        vec![-1.0; 4],
        vec![ConeRowKind::Ge; 4],
        vec![-1.0; 2],
        vec![1.0; 2],
    )
    .unwrap()
}

#[test]
fn diamond_in_box() {
    let p = diamond();
    assert_eq!(nnf_exact(&p).unwrap(), 9);
    assert_eq!(nnf_upper_bound(&p), BigUint::from(144u32));
}

#[test]
fn box_count_is_tight() {
    for n in 1..=4 {
        let p = AviProblem::boxed(SparseMatrix::identity(n), vec![0.0; n], vec![0.0; n], vec![1.0; n]).unwrap();
        let three = 3u64.pow(n as u32);
        assert_eq!(nnf_exact(&p).unwrap(), three);
        assert_eq!(nnf_upper_bound(&p), BigUint::from(three));
    }
}

/// Faces of a bounded full-dimensional polygon: vertices from pairwise
/// line intersections, edges from lines carrying two distinct vertices.
fn polygon_faces(rows: &[([f64; 2], f64)]) -> u64 {
    let feasible = |x: [f64; 2]| rows.iter().all(|(a, b)| a[0] * x[0] + a[1] * x[1] >= b - 1e-9);
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (rows[i].0, rows[j].0);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(rows[i].1 * b[1] - a[1] * rows[j].1) / det, (a[0] * rows[j].1 - rows[i].1 * b[0]) / det];
            if feasible(x) && !verts.iter().any(|v| (v[0] - x[0]).abs() + (v[1] - x[1]).abs() < 1e-7) {
                verts.push(x);
            }
        }
    }
    if verts.is_empty() {
        return 0;
    }
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for (a, b) in rows {
        let on: Vec<usize> = (0..verts.len())
            .filter(|&k| (a[0] * verts[k][0] + a[1] * verts[k][1] - b).abs() < 1e-7)
            .collect();
        if on.len() >= 2 && !edges.contains(&on) {
            edges.push(on);
        }
    }
    let full_dim = verts.len() >= 3;
    verts.len() as u64 + edges.len() as u64 + u64::from(full_dim)
}

#[test]
fn random_polygons_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let m = rng.gen_range(0..=4);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut rows: Vec<([f64; 2], f64)> = Vec::new();
        for _ in 0..m {
            let g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let rhs = rng.gen_range(-1.0..0.2);
            a.push(g.to_vec());
            b.push(rhs);
            rows.push((g, rhs));
        }
        rows.extend([([1.0, 0.0], -1.0), ([-1.0, 0.0], -1.0), ([0.0, 1.0], -1.0), ([0.0, -1.0], -1.0)]);
        let amat = if m == 0 { SparseMatrix::zeros(0, 2) } else { SparseMatrix::from_dense(&a) };
        let p = AviProblem::new(
            SparseMatrix::identity(2),
            vec![0.0; 2],
            amat,
            b,
            vec![ConeRowKind::Ge; m],
            vec![-1.0; 2],
            vec![1.0; 2],
        )
        .unwrap();
        let exact = nnf_exact(&p).unwrap();
        assert_eq!(exact, polygon_faces(&rows), "{rows:?}");
        assert!(BigUint::from(exact) <= nnf_upper_bound(&p));
        assert!(BigUint::from(exact) <= nnf_mcp_product(&p));
    }
}

/// Strongly monotone instance over a polyhedron with free directions.
fn monotone_instance(rng: &mut ChaCha8Rng) -> AviProblem {
    let n = rng.gen_range(2..=10);
    let m = rng.gen_range(1..=6);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let s = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mm = &b * b.transpose() + DMatrix::identity(n, n) + (&s - s.transpose());
    let q = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    // rows only touch the first `n - free` coordinates
    let free = rng.gen_range(0..n);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = vec![vec![0.0; n]; m];
    let mut rhs = Vec::new();
    let mut kinds = Vec::new();
    for row in a.iter_mut() {
        for x in row.iter_mut().take(n - free) {
            *x = rng.gen_range(-1.0..1.0);
        }
        if row.iter().all(|&x| x == 0.0) {
            row[0] = 1.0;
        }
        let ax: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
        let kind = [ConeRowKind::Ge, ConeRowKind::Le, ConeRowKind::Eq][rng.gen_range(0..3)];
        let slack = rng.gen_range(0.0..1.0);
        rhs.push(match kind {
            ConeRowKind::Ge => ax - slack,
            ConeRowKind::Le => ax + slack,
            ConeRowKind::Eq => ax,
        });
        kinds.push(kind);
    }
    let mut l = vec![-INF; n];
    let u = vec![INF; n];
    for j in 0..n - free {
        if rng.gen_bool(0.3) {
            l[j] = x0[j] - 1.0;
        }
    }
    AviProblem::new(SparseMatrix::from_nalgebra(&mm, 0.0), q, SparseMatrix::from_dense(&a), rhs, kinds, l, u).unwrap()
}

#[test]
fn three_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = SolveOptions::default();
    let mut all_three = 0;
    for _ in 0..50 {
        let p = monotone_instance(&mut rng);
        let direct = lemke_solve(&p, &opts).unwrap();
        assert_eq!(direct.status, SolveStatus::Solved, "{:?}", direct.message);
        let z = direct.solution.unwrap().z;

        // free multipliers of equality rows can make the box form singular
        // on its lineality space; that route is then skipped
        let back = match lemke_solve(&to_mcp(&p), &opts) {
            Ok(res) => {
                assert_eq!(res.status, SolveStatus::Solved);
                let back = from_mcp_solution(&p, &res.solution.unwrap());
                let kr = kkt_residual(&p, &back).unwrap();
                assert!(kr.max() <= 1e-9 * (1.0 + 3.0), "{kr:?}");
                all_three += 1;
                Some(back)
            }
            Err(Error::NotInvertibleOnLineality { .. }) => None,
            Err(e) => panic!("{e}"),
        };

        let rp = reduce_lineality(&p).unwrap();
        let res = lemke_solve(&rp.problem, &opts).unwrap();
        assert_eq!(res.status, SolveStatus::Solved);
        let lifted = lift_full(&p, &rp, &res.solution.unwrap());
        assert!(kkt_residual(&p, &lifted).unwrap().stationarity <= 1e-9 * (1.0 + 3.0));

        for j in 0..p.n() {
            if let Some(back) = &back {
                assert!((back.z[j] - z[j]).abs() <= 1e-6);
            }
            assert!((lifted.z[j] - z[j]).abs() <= 1e-6);
        }

        // Schur identity at the solution
        let zv = DVector::from_column_slice(&z);
        let x = rp.qbar.transpose() * &zv;
        let lhs = &rp.m_tilde * &x + &rp.q_tilde;
        let g = p.m_mat.mul_vec(&z).iter().zip(&p.q).map(|(a, b)| a + b).collect::<Vec<_>>();
        let rhs = rp.qbar.transpose() * DVector::from_vec(g);
        assert!((lhs - rhs).amax() <= 1e-9 * (1.0 + zv.amax()));
    }
    assert!(all_three >= 25, "only {all_three} instances ran all three routes");
}
