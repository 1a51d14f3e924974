use convexshape::linalg::CsrMatrix;
use convexshape::qp::{solve_qp, solve_qp_warm, QpSettings, QpStatus, QuadraticProgram, WarmStart};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Instance {
    h: DMatrix<f64>,
    g: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    e: DMatrix<f64>,
    d: DVector<f64>,
}

fn random_instance(rng: &mut StdRng, n: usize, m: usize, p: usize) -> Instance {
    let l = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let g = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let e = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
    let b = &a * &x0 + DVector::from_fn(m, |_, _| rng.gen_range(0.0..0.5));
    let d = &e * &x0;
    Instance { h, g, a, b, e, d }
}

fn to_qp(inst: &Instance) -> QuadraticProgram {
    QuadraticProgram::new(
        CsrMatrix::from_dense(&inst.h),
        inst.g.iter().copied().collect(),
        CsrMatrix::from_dense(&inst.a),
        inst.b.iter().copied().collect(),
        CsrMatrix::from_dense(&inst.e),
        inst.d.iter().copied().collect(),
    )
    .unwrap()
}

/// Best KKT point over all inequality active sets (equalities always active)
/// that is primal and dual feasible.
fn enumerate_active_sets(inst: &Instance) -> (f64, DVector<f64>) {
    let n = inst.h.nrows();
    let m = inst.a.nrows();
    let p = inst.e.nrows();
    let mut best = (f64::INFINITY, DVector::zeros(n));
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = rows.len();
        if k + p > n {
            continue;
        }
        let mut kk = DMatrix::zeros(n + k + p, n + k + p);
        kk.view_mut((0, 0), (n, n)).copy_from(&inst.h);
        let mut rhs = DVector::zeros(n + k + p);
        rhs.rows_mut(0, n).copy_from(&(-&inst.g));
        let active = rows
            .iter()
            .map(|&i| (inst.a.row(i), inst.b[i]))
            .chain((0..p).map(|i| (inst.e.row(i), inst.d[i])));
        for (r, (row, rv)) in active.enumerate() {
            for j in 0..n {
                kk[(n + r, j)] = row[j];
                kk[(j, n + r)] = row[j];
            }
            rhs[n + r] = rv;
        }
        let Some(sol) = kk.lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, n).into_owned();
        let lam_ok = (0..k).all(|r| sol[n + r] >= -1e-9);
        let feas = (&inst.a * &x - &inst.b).iter().all(|&v| v <= 1e-9);
        if lam_ok && feas {
            let obj = 0.5 * x.dot(&(&inst.h * &x)) + inst.g.dot(&x);
            if obj < best.0 {
                best = (obj, x);
            }
        }
    }
    best
}

#[test]
fn matches_active_set_enumeration() {
    let mut rng = StdRng::seed_from_u64(11);
    for case in 0..50 {
        let n = rng.gen_range(2..=30);
        let m = rng.gen_range(1..=12);
        let p = rng.gen_range(0..=5.min(n - 1));
        let inst = random_instance(&mut rng, n, m, p);
        let qp = to_qp(&inst);
        let sol = solve_qp(&qp, 1e-8, 200_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved, "case {case}");
        assert!(sol.kkt.max() <= 1e-6, "case {case}: {:?}", sol.kkt);
        assert!(sol.ineq_multipliers.iter().all(|&l| l >= 0.0));
        let (oracle, x_star) = enumerate_active_sets(&inst);
        let obj = qp.objective(&sol.primal);
        assert!((obj - oracle).abs() <= 1e-6, "case {case}: {obj} vs {oracle}");
        let dx = sol.primal.iter().zip(x_star.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dx <= 1e-6, "case {case}: primal off by {dx}");
    }
}

#[test]
fn larger_instances_solve() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..10 {
        let inst = random_instance(&mut rng, 30, 20, 5);
        let sol = solve_qp(&to_qp(&inst), 1e-8, 200_000).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!(sol.kkt.max() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_leaves_argmin(seed in 0u64..10_000, s in 0.01f64..100.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 6, 5, 2);
        let base = solve_qp(&to_qp(&inst), 1e-8, 200_000).unwrap();
        let scaled_inst = Instance { h: &inst.h * s, g: &inst.g * s, a: inst.a.clone(), b: inst.b.clone(), e: inst.e.clone(), d: inst.d.clone() };
        let scaled = solve_qp(&to_qp(&scaled_inst), 1e-8, 200_000).unwrap();
        prop_assert_eq!(base.status, QpStatus::Solved);
        prop_assert_eq!(scaled.status, QpStatus::Solved);
        for (x, y) in base.primal.iter().zip(&scaled.primal) {
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
        }
        for (l, ls) in base.ineq_multipliers.iter().zip(&scaled.ineq_multipliers) {
            prop_assert!((l * s - ls).abs() <= 1e-6 * (1.0 + ls.abs()));
        }
    }

    #[test]
    fn warm_start_keeps_fixed_point(seed in 0u64..10_000) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 8, 6, 3);
        let qp = to_qp(&inst);
        let cold = solve_qp(&qp, 1e-8, 200_000).unwrap();
        let warm = solve_qp_warm(&qp, &QpSettings::default(), Some(&WarmStart::from(&cold))).unwrap();
        prop_assert_eq!(warm.status, QpStatus::Solved);
        for (x, y) in cold.primal.iter().zip(&warm.primal) {
            prop_assert!((x - y).abs() <= 1e-7);
        }
    }
}
