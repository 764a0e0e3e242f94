use lesde::dynamics::{simulate_sde, InitSpec, MeanTrajectory, NoiseSpec, TimeGrid};
use lesde::elasticity::{
    build_drift, schur_bounds, schur_product, stacked_margins, DriftSpec, EffectMatrix, ElasticitySchedule, HKernel,
};
use lesde::estimation::savgol;
use lesde::geometry::{check_direction, is_linearly_separable};
use lesde::io::{read_trajectory, write_trajectory, TrajectoryFile, TrajectoryHeader};
use lesde::linalg::{symmetric_eigen, Mat};
use proptest::prelude::*;

/// Random PSD matrix GᵀG from n·n entries.
fn gram(n: usize, entries: &[f64]) -> Mat {
    let g = Mat::from_fn(n, n, |i, j| entries[i * n + j]);
    g.transpose().matmul(&g)
}

fn psd_pair() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (2usize..=5, 1usize..=5).prop_flat_map(|(k, p)| {
        let n = k * p;
        (Just(k), Just(p), prop::collection::vec(-2.0f64..2.0, k * k), prop::collection::vec(-2.0f64..2.0, n * n))
    })
}

fn cloud(rows: usize, p: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-5.0f64..5.0, rows * p).prop_map(move |v| Mat::from_vec(rows, p, v))
}

/// Simpson's rule with 2000 panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schur_eigenvalues_lie_in_bounds((k, p, e, h) in psd_pair()) {
        let n = k * p;
        let hm = gram(n, &h);
        let hm = Mat::from_fn(n, n, |i, j| hm[(i, j)] + if i == j { 1e-3 } else { 0.0 });
        let effect = EffectMatrix::general(gram(k, &e)).unwrap();
        let kernel = HKernel::custom(p, hm).unwrap();
        let (lo, hi) = schur_bounds(&effect, &kernel).unwrap();
        let ev = symmetric_eigen(&schur_product(&effect, &kernel).unwrap()).unwrap().values;
        let tol = 1e-9 * hi.abs().max(1.0);
        prop_assert!(ev[0] >= lo - tol, "{} < {}", ev[0], lo);
        prop_assert!(ev[ev.len() - 1] <= hi + tol, "{} > {}", ev[ev.len() - 1], hi);
    }

    #[test]
    fn margin_stack_is_an_eigenvector(k in 2usize..=6, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let m = build_drift(&DriftSpec::lmodel(k, alpha, beta)).unwrap().scale(k as f64);
        let d = stacked_margins(k);
        let md = m.matvec(&d);
        for (x, y) in md.iter().zip(&d) {
            prop_assert!((x - (alpha - beta) * y).abs() <= 1e-12 * (1.0 + alpha.abs() + beta.abs()));
        }
    }

    #[test]
    fn savgol_is_linear(
        x in prop::collection::vec(-10.0f64..10.0, 30),
        y in prop::collection::vec(-10.0f64..10.0, 30),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        deriv in 0usize..=1,
    ) {
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let sx = savgol(&x, 7, 3, deriv, 0.5).unwrap();
        let sy = savgol(&y, 7, 3, deriv, 0.5).unwrap();
        let sc = savgol(&combo, 7, 3, deriv, 0.5).unwrap();
        for i in 0..30 {
            prop_assert!((sc[i] - (a * sx[i] + b * sy[i])).abs() <= 1e-9);
        }
    }

    #[test]
    fn integrated_strength_is_additive(
        a0 in 0.1f64..3.0,
        b0 in -1.0f64..1.0,
        ra in 0.0f64..2.0,
        rb in 0.0f64..2.0,
        s in 0.0f64..5.0,
        dt in 0.01f64..5.0,
    ) {
        let sched = ElasticitySchedule::power_tail(a0, b0, ra, rb);
        let t = s + dt;
        let (x, y) = (sched.integrate(s, 3).unwrap(), sched.integrate(t, 3).unwrap());
        let qa = simpson(|u| sched.eval(u).unwrap().0, s, t);
        let qb = simpson(|u| sched.eval(u).unwrap().1, s, t);
        prop_assert!((y.a - x.a - qa).abs() <= 1e-8 * (1.0 + qa.abs()));
        prop_assert!((y.b - x.b - qb).abs() <= 1e-8 * (1.0 + qb.abs()));
    }

    #[test]
    fn tabulated_integral_is_additive(
        alpha in prop::collection::vec(-2.0f64..2.0, 6),
        s in 0.0f64..5.0,
        dt in 0.0f64..5.0,
    ) {
        let times: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let sched = ElasticitySchedule::tabulated(times, alpha.clone(), alpha).unwrap();
        let t = s + dt;
        let whole = sched.integrate(t, 2).unwrap().a;
        let part = sched.integrate(s, 2).unwrap().a;
        let q = simpson(|u| sched.eval(u).unwrap().0, s, t);
        // Simpson is not exact across kinks; the tolerance covers that.
        prop_assert!((whole - part - q).abs() <= 1e-5);
    }

    #[test]
    fn direction_verdict_is_scale_invariant(
        a in cloud(6, 3),
        b in cloud(5, 3),
        nu in prop::collection::vec(-1.0f64..1.0, 3),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(nu.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let base = check_direction(&a, &b, &nu).unwrap().separable;
        let scaled_nu: Vec<f64> = nu.iter().map(|v| c * v).collect();
        prop_assert_eq!(check_direction(&a, &b, &scaled_nu).unwrap().separable, base);
        prop_assert_eq!(check_direction(&a.scale(c), &b.scale(c), &nu).unwrap().separable, base);
    }

    #[test]
    fn exact_verdict_is_scale_invariant_and_witnessed(
        a in cloud(5, 2),
        b in cloud(5, 2),
        shift in prop::collection::vec(-12.0f64..12.0, 2),
        c in 0.01f64..100.0,
    ) {
        let b = Mat::from_fn(5, 2, |i, j| b[(i, j)] + shift[j]);
        let v = is_linearly_separable(&a, &b).unwrap();
        prop_assert_eq!(is_linearly_separable(&a.scale(c), &b.scale(c)).unwrap().separable, v.separable);
        if let Some(w) = v.witness {
            prop_assert!(v.separable);
            for i in 0..5 {
                let pa: f64 = a.row(i).iter().zip(&w.direction).map(|(x, y)| x * y).sum();
                let pb: f64 = b.row(i).iter().zip(&w.direction).map(|(x, y)| x * y).sum();
                prop_assert!(pa > w.offset && pb < w.offset);
            }
        }
    }

    #[test]
    fn trajectory_csv_round_trips(
        k in 2usize..=4,
        p in 1usize..=3,
        trials in 1usize..=3,
        steps in 1usize..=4,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * 0.25).collect();
        let trajs: Vec<MeanTrajectory> = (0..trials)
            .map(|_| {
                let means = grid.iter().map(|_| (0..k * p).map(|_| rng.random_range(-1e6..1e6)).collect()).collect();
                MeanTrajectory::new(grid.clone(), k, p, means).unwrap()
            })
            .collect();
        let file = TrajectoryFile {
            header: TrajectoryHeader { k, p, n: 3, trials, dt: Some(0.25), source: "prop".into() },
            trials: trajs,
        };
        let mut first = Vec::new();
        write_trajectory(&mut first, &file).unwrap();
        let back = read_trajectory(first.as_slice()).unwrap();
        prop_assert_eq!(&back, &file);
        let mut second = Vec::new();
        write_trajectory(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulation_is_deterministic_per_seed(seed in any::<u64>()) {
        let drift = DriftSpec::imodel(2, 2, 1.0, 0.3);
        let sched = ElasticitySchedule::constant(1.0, 0.3);
        let noise = NoiseSpec::Isotropic { sigma: 0.1 };
        let init = InitSpec::Gaussian { n: 4, means: vec![1.0, 0.0, 0.0, 1.0], sd: 0.2 };
        let grid = TimeGrid::new(0.5, 0.01, 10);
        let a = simulate_sde(&drift, &sched, &noise, &init, &grid, 3, seed).unwrap();
        let b = simulate_sde(&drift, &sched, &noise, &init, &grid, 3, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
