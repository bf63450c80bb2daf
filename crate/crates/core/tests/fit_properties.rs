use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ringqed::fit::{
    extract_fsr, extract_odmr_peaks, extract_q, fit, fit_auto, initial_guess, numeric_jacobian, FitOptions,
    Model, ModelSpec, Weights,
};
use ringqed::decay::{simulate_decay_trace, DecaySettings};
use ringqed::emitter::EmitterParams;
use ringqed::fit::extract_lifetime;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn noisy(m: &ModelSpec, xs: &[f64], p: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    m.eval_all(xs, p).into_iter().map(|y| y + n.sample(&mut rng)).collect()
}

fn assert_jacobians_agree(m: &ModelSpec, p: &[f64], xs: &[f64]) -> Result<(), TestCaseError> {
    let a = m.jacobian(xs, p);
    let n = numeric_jacobian(m, p, xs, 1e-6);
    prop_assert_eq!(a.len(), xs.len());
    prop_assert!(a.iter().all(|row| row.len() == Model::<f64>::n_params(m)));
    for col in 0..p.len() {
        let scale = a.iter().map(|r| r[col].abs()).fold(1e-12, f64::max);
        for (ra, rn) in a.iter().zip(&n) {
            prop_assert!((ra[col] - rn[col]).abs() <= 1e-6 * scale, "col {} {} vs {}", col, ra[col], rn[col]);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lorentzian_jacobian_matches_finite_differences(
        a in 0.1f64..10.0, c in 1090.0f64..1110.0, w in 0.2f64..3.0, b in -1.0f64..1.0,
    ) {
        assert_jacobians_agree(&ModelSpec::Lorentzian, &[a, c, w, b], &grid(1085.0, 1115.0, 121))?;
    }

    #[test]
    fn multi_lorentzian_jacobian_matches_finite_differences(
        a1 in 0.01f64..1.0, c1 in 1300.0f64..1330.0, w1 in 2.0f64..20.0,
        a2 in 0.01f64..1.0, c2 in 1340.0f64..1370.0, w2 in 2.0f64..20.0, b in -0.1f64..0.1,
    ) {
        assert_jacobians_agree(&ModelSpec::MultiLorentzian(2), &[a1, c1, w1, a2, c2, w2, b], &grid(1280.0, 1390.0, 111))?;
    }

    #[test]
    fn exp_decay_jacobian_matches_finite_differences(
        a in 10.0f64..1e4, tau in 1.0f64..50.0, b in 0.0f64..1e3,
    ) {
        assert_jacobians_agree(&ModelSpec::ExpDecay, &[a, tau, b], &grid(0.0, 100.0, 101))?;
    }

    #[test]
    fn damped_cosine_jacobian_matches_finite_differences(
        a in 0.01f64..0.5, f in 0.001f64..0.05, t in 100.0f64..5000.0, o in 0.5f64..2.0,
    ) {
        assert_jacobians_agree(&ModelSpec::DampedCosine, &[a, f, t, o], &grid(0.0, 400.0, 101))?;
    }

    #[test]
    fn accepted_steps_never_raise_chi2(seed in 0u64..1000, da in 0.7f64..1.3, dc in -0.3f64..0.3, dw in 0.7f64..1.3) {
        let xs = grid(1096.0, 1104.0, 201);
        let truth = [1.0, 1100.0, 0.87, 0.2];
        let ys = noisy(&ModelSpec::Lorentzian, &xs, &truth, 0.05, seed);
        let init = [da, 1100.0 + dc, 0.87 * dw, 0.2];
        let r = fit(&ModelSpec::Lorentzian, &xs, &ys, &Weights::Unit, &init, &FitOptions::default()).unwrap();
        prop_assert!(r.chi2_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*r.chi2_history.last().unwrap(), r.chi2);
    }

    #[test]
    fn shifting_x_shifts_only_the_center(seed in 0u64..1000, shift in -500.0f64..500.0) {
        let xs = grid(1096.0, 1104.0, 201);
        let truth = [1.0, 1100.0, 0.87, 0.2];
        let ys = noisy(&ModelSpec::Lorentzian, &xs, &truth, 0.05, seed);
        let init = [0.9, 1100.2, 0.8, 0.25];
        let a = fit(&ModelSpec::Lorentzian, &xs, &ys, &Weights::Unit, &init, &FitOptions::default()).unwrap();
        let xs2: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let init2 = [init[0], init[1] + shift, init[2], init[3]];
        let b = fit(&ModelSpec::Lorentzian, &xs2, &ys, &Weights::Unit, &init2, &FitOptions::default()).unwrap();
        prop_assert!((b.params[1] - shift - a.params[1]).abs() < 1e-6);
        for i in [0, 2, 3] {
            prop_assert!((b.params[i] - a.params[i]).abs() < 1e-6 * a.params[i].abs().max(1.0));
        }
    }

    #[test]
    fn covariance_is_symmetric_psd(seed in 0u64..1000) {
        let xs = grid(1280.0, 1390.0, 221);
        let m = ModelSpec::MultiLorentzian(2);
        let ys = noisy(&m, &xs, &[0.031, 1315.1, 10.0, 0.031, 1352.4, 10.0, 0.0], 0.001, seed);
        let r = fit_auto(m, &xs, &ys, &Weights::Unit).unwrap();
        let n = r.params.len();
        let cov = DMatrix::from_fn(n, n, |i, j| r.covariance[i][j]);
        prop_assert!((cov.clone() - cov.transpose()).abs().max() == 0.0);
        let eig = SymmetricEigen::new(cov).eigenvalues;
        let max = eig.max();
        prop_assert!(eig.iter().all(|&e| e >= -1e-10 * max));
        for i in 0..n {
            prop_assert_eq!(r.sigmas[i], r.covariance[i][i].sqrt());
        }
    }
}

#[test]
fn noiseless_lorentzian_recovered_from_perturbed_init() {
    let xs = grid(1096.0, 1104.0, 401);
    let truth = [1.0, 1100.0, 0.8723, 0.2];
    let ys = ModelSpec::Lorentzian.eval_all(&xs, &truth);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let init: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 1 { v + rng.random_range(-0.2..0.2) } else { v * rng.random_range(0.8..1.2) })
            .collect();
        let r = fit(&ModelSpec::Lorentzian, &xs, &ys, &Weights::Unit, &init, &FitOptions::default()).unwrap();
        assert!(r.converged);
        for (p, t) in r.params.iter().zip(truth) {
            assert!(((p - t) / t).abs() < 1e-8, "{p} vs {t} from {init:?}");
        }
    }
}

#[test]
fn exact_init_converges_immediately() {
    for (m, p, xs) in [
        (ModelSpec::Lorentzian, vec![1.0, 1100.0, 0.87, 0.2], grid(1096.0, 1104.0, 201)),
        (ModelSpec::ExpDecay, vec![2000.0, 15.85, 700.0], grid(0.05, 99.95, 1000)),
        (ModelSpec::DampedCosine, vec![0.06, 0.01, 2000.0, 1.0], grid(0.0, 400.0, 101)),
    ] {
        let ys = m.eval_all(&xs, &p);
        let r = fit(&m, &xs, &ys, &Weights::Unit, &p, &FitOptions::default()).unwrap();
        assert_eq!(r.chi2, 0.0, "{m}");
        assert!(r.n_iterations <= 2 && r.converged, "{m}");
    }
}

#[test]
fn one_sigma_coverage_is_nominal() {
    // Each parameter's truth should fall inside ±1σ about 68% of the time.
    let xs = grid(1096.0, 1104.0, 201);
    let truth = [1.0, 1100.0, 0.87, 0.2];
    let n = 400;
    let mut hits = [0usize; 4];
    for seed in 0..n {
        let ys = noisy(&ModelSpec::Lorentzian, &xs, &truth, 0.05, 10_000 + seed);
        let r = fit_auto(ModelSpec::Lorentzian, &xs, &ys, &Weights::Unit).unwrap();
        for i in 0..4 {
            if (r.params[i] - truth[i]).abs() <= r.sigmas[i] {
                hits[i] += 1;
            }
        }
    }
    for (i, h) in hits.iter().enumerate() {
        let frac = *h as f64 / n as f64;
        assert!((0.60..=0.76).contains(&frac), "param {i}: coverage {frac}");
    }
}

#[test]
fn fsr_standard_error_matches_jitter() {
    // Jittered comb: the standard error of adjacent spacings should be about
    // σⱼ·√2/√(n−1) on average.
    let (n, sigma_j, fsr) = (8usize, 0.05, 15.0);
    let normal = Normal::new(0.0, sigma_j).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut mean_se, mut means) = (0.0, Vec::new());
    for _ in 0..1000 {
        let centers: Vec<f64> = (0..n).map(|i| 1060.0 + fsr * i as f64 + normal.sample(&mut rng)).collect();
        let (m, se) = extract_fsr(&centers).unwrap();
        mean_se += se / 1000.0;
        means.push(m);
    }
    let expected = sigma_j * 2f64.sqrt() / ((n - 1) as f64).sqrt();
    assert!((mean_se / expected - 1.0).abs() < 0.1, "{mean_se} vs {expected}");
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    assert!((avg - fsr).abs() < 0.01);
}

#[test]
fn numeric_jacobian_trivial_models() {
    struct Constant;
    impl Model<f64> for Constant {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, _x: f64, p: &[f64]) -> f64 {
            p[0]
        }
        fn gradient(&self, _x: f64, _p: &[f64], g: &mut [f64]) {
            g[0] = 1.0;
            g[1] = 0.0;
        }
    }
    struct Line;
    impl Model<f64> for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: f64, p: &[f64]) -> f64 {
            p[0] * x + p[1]
        }
        fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
            g[0] = x;
            g[1] = 1.0;
        }
    }
    let xs = grid(-2.0, 2.0, 9);
    let j = numeric_jacobian(&Constant, &[3.0, 7.0], &xs, 1e-6);
    assert!(j.iter().all(|r| r[1] == 0.0 && (r[0] - 1.0).abs() < 1e-9));
    let a = numeric_jacobian(&Line, &[1.0, 2.0], &xs, 1e-6);
    let b = numeric_jacobian(&Line, &[-40.0, 9.0], &xs, 1e-6);
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-7);
        }
    }
}

#[test]
fn q_extraction_scales_with_noise() {
    let xs = grid(1096.0, 1104.0, 401);
    let truth = [1.0, 1100.0, 1100.0 / 1261.0, 0.2];
    let clean = fit_auto(ModelSpec::Lorentzian, &xs, &ModelSpec::Lorentzian.eval_all(&xs, &truth), &Weights::Unit).unwrap();
    let (q, s) = extract_q(&clean).unwrap();
    assert!((q - 1261.0).abs() < 1e-6 && s < 1e-6, "{q} ± {s}");
    let noisy_fit = fit_auto(ModelSpec::Lorentzian, &xs, &noisy(&ModelSpec::Lorentzian, &xs, &truth, 0.075, 5), &Weights::Unit).unwrap();
    let (q, s) = extract_q(&noisy_fit).unwrap();
    assert!((q - 1261.0).abs() < 3.0 * s && s > 10.0 && s < 100.0, "{q} ± {s}");
}

#[test]
fn odmr_peaks_independent_of_init_order() {
    let xs = grid(1280.0, 1390.0, 221);
    let m = ModelSpec::MultiLorentzian(2);
    let ys = noisy(&m, &xs, &[0.062, 1315.1, 10.0, 0.062, 1352.4, 10.0, 0.0], 0.001, 2);
    let init = initial_guess(m, &xs, &ys).unwrap();
    let swapped = [init[3], init[4], init[5], init[0], init[1], init[2], init[6]];
    let a = fit(&m, &xs, &ys, &Weights::Unit, &init, &FitOptions::default()).unwrap();
    let b = fit(&m, &xs, &ys, &Weights::Unit, &swapped, &FitOptions::default()).unwrap();
    let (pa, pb) = (extract_odmr_peaks(&a).unwrap(), extract_odmr_peaks(&b).unwrap());
    for (x, y) in [(pa.lower, pb.lower), (pa.upper, pb.upper)] {
        assert!((x.center - y.center).abs() < 1e-9 && (x.height - y.height).abs() < 1e-12);
    }
    assert!(pa.lower.center < pa.upper.center);
}

#[test]
fn odmr_contrasts_recovered_within_ten_percent() {
    let xs = grid(1280.0, 1390.0, 221);
    let m = ModelSpec::MultiLorentzian(2);
    for (k, c) in [0.032, 0.048, 0.062].into_iter().enumerate() {
        let ys = noisy(&m, &xs, &[c, 1315.1, 10.0, c, 1352.4, 10.0, 0.0], 0.001, 40 + k as u64);
        let p = extract_odmr_peaks(&fit_auto(m, &xs, &ys, &Weights::Unit).unwrap()).unwrap();
        for h in [p.lower.height, p.upper.height] {
            assert!((h / c - 1.0).abs() < 0.1, "{h} vs {c}");
        }
        assert!(p.is_resolved());
    }
}

#[test]
fn decay_fit_matches_quoted_precision() {
    let p = EmitterParams::from_off_lifetime(15.85, 0.031, 14.94).unwrap();
    let settings = DecaySettings { total_counts: 1_000_000, n_bins: 1000, rep_period_ns: 100.0, background_fraction: 0.7 };
    let sim = simulate_decay_trace(&p, 0.0, &settings, 17).unwrap();
    let y: Vec<f64> = sim.trace.counts.iter().map(|&c| c as f64).collect();
    let r = fit_auto(ModelSpec::ExpDecay, &sim.trace.bin_centers_ns(), &y, &Weights::Poisson).unwrap();
    let (tau, s) = extract_lifetime(&r).unwrap();
    assert!((tau - 15.85).abs() < 3.0 * s, "{tau} ± {s}");
    assert!(s > 0.03 && s < 0.27, "{s}");
}

#[test]
fn f32_fits_work() {
    let xs: Vec<f32> = (0..201).map(|i| 1096.0 + 0.04 * i as f32).collect();
    let truth = [1.0f32, 1100.0, 0.87, 0.2];
    let ys = ModelSpec::Lorentzian.eval_all(&xs, &truth);
    let r = fit(&ModelSpec::Lorentzian, &xs, &ys, &Weights::Unit, &[0.9, 1100.1, 0.8, 0.25], &FitOptions::default()).unwrap();
    assert!((r.params[1] - 1100.0).abs() < 1e-3);
    assert!((r.params[2] - 0.87).abs() < 1e-3);
}
