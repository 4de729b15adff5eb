use num_complex::Complex64;
use proptest::prelude::*;
use sse_core::dynamics::{project_initial, propagate};
use sse_core::reduction::{
    nh_eigensystem, nh_propagate, nh_ratio_curve, noisy_spectrum, noisy_split_threshold, simulate_noisy,
    spectrum_split_detect, NhParams, NoiseSpec,
};
use sse_core::{build_matrix, diagonalize, Error, Execution, InitialState, SystemParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn trace_and_determinant_on_a_grid() {
    let w0 = 0.7;
    for i in 0..100 {
        for j in 0..100 {
            let (g, om) = (0.02 * i as f64, 0.02 * j as f64);
            let e = nh_eigensystem(&NhParams::new(g, om, w0).unwrap());
            let scale = 1.0 + g * g + om * om + w0 * w0;
            let tr = e.lambda_plus + e.lambda_minus;
            let det = e.lambda_plus * e.lambda_minus;
            let want_det = c(0.0, -w0) * c(-g, -w0) + om * om;
            assert!((tr - c(-g, -2.0 * w0)).norm() <= 1e-12 * scale, "trace at g={g}, om={om}");
            assert!((det - want_det).norm() <= 1e-12 * scale, "det at g={g}, om={om}");
        }
    }
}

#[test]
fn exact_real_and_imaginary_parts() {
    let w0 = 3.3;
    for i in 1..200 {
        for j in 0..200 {
            let g = 0.013 * i as f64;
            let om = 0.011 * j as f64;
            let e = nh_eigensystem(&NhParams::new(g, om, w0).unwrap());
            if om > g / 2.0 {
                assert_eq!(e.lambda_plus.re, -g / 2.0);
                assert_eq!(e.lambda_minus.re, -g / 2.0);
                assert!((e.plus_ratio() - 1.0).abs() <= 1e-12);
                assert!((e.e_minus[0].norm() - 1.0).abs() <= 1e-12);
            } else if om < g / 2.0 {
                assert_eq!(e.lambda_plus.im, -w0);
                assert_eq!(e.lambda_minus.im, -w0);
                assert!(e.plus_ratio() < 1.0);
            }
        }
    }
    let at_ep = nh_eigensystem(&NhParams::new(0.4, 0.2, 0.0).unwrap());
    assert!((at_ep.plus_ratio() - 1.0).abs() <= 1e-12);
}

#[test]
fn eigenvector_ratio_curve() {
    let sys = SystemParams::from_band(100, 1.0, 1.0, 0.0, 0.0).unwrap();
    let curve = nh_ratio_curve(&sys, &[1e-4, 0.3, 0.5, 0.6, 2.0], 0.5).unwrap();
    let r: Vec<f64> = curve.points.iter().map(|p| p.ratio).collect();
    assert!(r[0] < 1e-3);
    assert!((r[1] - 1.0 / 3.0).abs() < 1e-12);
    for x in &r[2..] {
        assert!((x - 1.0).abs() < 1e-12, "{x}");
    }
}

#[test]
fn near_ep_propagation_is_continuous() {
    let g = 1.0;
    let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.37).collect();
    let init = [c(0.4, 0.1), c(-0.2, 0.9)];
    let at = nh_propagate(&NhParams::new(g, 0.5, 0.0).unwrap(), init, &times);
    for off in [2e-7, -2e-7, 5e-6, -5e-6] {
        let near = nh_propagate(&NhParams::new(g, 0.5 + off, 0.0).unwrap(), init, &times);
        for i in 0..times.len() {
            let tol = 1e-4 * (1.0 + times[i]);
            assert!((at.a1[i] - near.a1[i]).norm() < tol && (at.a2[i] - near.a2[i]).norm() < tol, "off {off}, t {}", times[i]);
        }
    }
}

#[test]
fn hermitian_limit_matches_the_closed_pair() {
    let (om, w0) = (0.3, 0.5);
    let nh = NhParams::new(0.0, om, w0).unwrap();
    let sys = SystemParams::new(2, 0.2, 0.0, om, w0).unwrap();
    let basis = diagonalize(&build_matrix(&sys).unwrap()).unwrap();
    let init = [c(0.6, -0.1), c(0.2, 0.7)];
    let co = project_initial(&basis, &InitialState::head(init[0], init[1], 2)).unwrap();
    let times: Vec<f64> = (0..300).map(|i| i as f64 * 0.41).collect();
    let a = nh_propagate(&nh, init, &times);
    let b = propagate(&basis, &co, &times).unwrap();
    for i in 0..times.len() {
        assert!((a.a1[i] - b.a1[i]).norm() <= 1e-10);
        assert!((a.a2[i] - b.a2[i]).norm() <= 1e-10);
    }
}

#[test]
fn reduction_tracks_the_finite_bath_before_the_first_return() {
    let sys = SystemParams::from_band(400, 1.0, 0.01, 0.0, 0.0).unwrap();
    let sys = sys.with_omega(0.5 * sys.omega_sse());
    let basis = diagonalize(&build_matrix(&sys).unwrap()).unwrap();
    let one = c(1.0, 0.0);
    let co = project_initial(&basis, &InitialState::head(one, one, 400)).unwrap();
    let times: Vec<f64> = (0..=300).map(|i| i as f64 * 0.001 * sys.t_return()).collect();
    let h = propagate(&basis, &co, &times).unwrap();
    let r = nh_propagate(&NhParams::from_system(&sys), [one, one], &times);
    let dev = (0..times.len())
        .map(|i| (h.a1[i].norm() - r.a1[i].norm()).abs().max((h.a2[i].norm() - r.a2[i].norm()).abs()))
        .fold(0.0, f64::max);
    assert!(dev <= 0.05, "deviation {dev}");
}

#[test]
fn split_formula() {
    let s2 = std::f64::consts::SQRT_2;
    for (g, t) in [(0.01, 1.0), (1.0, 0.3), (7.0, 40.0)] {
        assert!((noisy_split_threshold(g, 0.0, t, 0.0).unwrap() - g / s2).abs() <= 1e-12 * g);
        assert!((noisy_split_threshold(g, 0.0, 2.0 * t, 0.0).unwrap() - g / s2).abs() <= 1e-12 * g);
        assert!((noisy_split_threshold(g, g, t, t).unwrap() - g / 3f64.sqrt()).abs() <= 1e-12 * g);
    }
    assert!(matches!(noisy_split_threshold(1.0, 0.0, 0.0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(noisy_split_threshold(0.0, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn ou_stationary_variance() {
    let p = NhParams::new(1.0, 0.0, 0.0).unwrap();
    let noise = NoiseSpec { temperature: 1.0, seed: 11, dt: 0.005, n_realizations: 64 };
    let runs = simulate_noisy(&p, &noise, [c(0.0, 0.0), c(0.0, 0.0)], 100.0, Execution::Parallel).unwrap();
    let (mut s, mut n) = (0.0, 0usize);
    for r in &runs {
        for (t, a) in r.times.iter().zip(&r.a1) {
            if *t >= 10.0 {
                s += a.norm_sqr();
                n += 1;
            }
        }
    }
    let v = s / n as f64;
    assert!((v - 0.5).abs() < 0.05 * 0.5, "stationary <|a1|^2> = {v}");
    // Oscillator 2 is uncoupled at Omega = 0 and never moves.
    assert!(runs.iter().all(|r| r.a2.iter().all(|a| a.norm() == 0.0)));
}

#[test]
fn noise_averages_to_the_deterministic_solution() {
    let p = NhParams::new(1.0, 0.8, 0.0).unwrap();
    let noise = NoiseSpec { temperature: 1.0, seed: 2024, dt: 1e-3, n_realizations: 256 };
    let init = [c(1.0, 0.0), c(0.0, 0.0)];
    let runs = simulate_noisy(&p, &noise, init, 5.0, Execution::Parallel).unwrap();
    let idx = [500, 1500, 2500, 3500, 5000];
    let times: Vec<f64> = idx.iter().map(|&i| runs[0].times[i]).collect();
    let det = nh_propagate(&p, init, &times);
    let n = runs.len() as f64;
    for (k, &i) in idx.iter().enumerate() {
        for (comp, want) in [(0, det.a1[k]), (1, det.a2[k])] {
            let xs: Vec<Complex64> = runs.iter().map(|r| if comp == 0 { r.a1[i] } else { r.a2[i] }).collect();
            let mean = xs.iter().sum::<Complex64>() / n;
            for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
                let m = part(mean);
                let var = xs.iter().map(|z| (part(*z) - m).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                assert!((m - part(want)).abs() <= 3.0 * se, "t={} comp {comp}: {m} vs {}", times[k], part(want));
            }
        }
    }
}

#[test]
fn zero_temperature_is_first_order_in_the_step() {
    let p = NhParams::new(1.0, 0.9, 0.0).unwrap();
    let init = [c(0.3, 0.2), c(1.0, 0.0)];
    let err = |dt: f64| {
        let noise = NoiseSpec { temperature: 0.0, seed: 1, dt, n_realizations: 1 };
        let r = &simulate_noisy(&p, &noise, init, 4.0, Execution::Sequential).unwrap()[0];
        let d = nh_propagate(&p, init, &r.times);
        (0..r.times.len()).map(|i| (r.a1[i] - d.a1[i]).norm().max((r.a2[i] - d.a2[i]).norm())).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!(e1 < 2e-3, "{e1}");
    assert!((e1 / e2 - 2.0).abs() < 0.2, "order ratio {}", e1 / e2);
}

#[test]
fn seeded_noise_is_reproducible() {
    let p = NhParams::new(0.5, 0.4, 1.0).unwrap();
    let noise = NoiseSpec { temperature: 2.0, seed: 77, dt: 0.01, n_realizations: 8 };
    let init = [c(1.0, 0.0), c(0.0, 1.0)];
    let a = simulate_noisy(&p, &noise, init, 20.0, Execution::Parallel).unwrap();
    let b = simulate_noisy(&p, &noise, init, 20.0, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let other = simulate_noisy(&p, &NoiseSpec { seed: 78, ..noise }, init, 20.0, Execution::Parallel).unwrap();
    assert_ne!(a, other);
}

#[test]
fn step_size_is_checked() {
    let p = NhParams::new(1.0, 3.0, 0.0).unwrap();
    let noise = NoiseSpec { temperature: 1.0, seed: 0, dt: 0.005, n_realizations: 1 };
    let r = simulate_noisy(&p, &noise, [c(0.0, 0.0); 2], 1.0, Execution::Sequential);
    assert!(matches!(r, Err(Error::StepSize { .. })));
}

#[test]
fn spectrum_needs_noise_and_damping() {
    let p = NhParams::new(0.01, 0.005, 0.0).unwrap();
    let cold = NoiseSpec { temperature: 0.0, seed: 0, dt: 0.5, n_realizations: 1 };
    assert!(matches!(noisy_spectrum(&p, &cold, 1e5, Execution::Sequential), Err(Error::Domain(_))));
    let undamped = NhParams::new(0.0, 0.005, 0.0).unwrap();
    let warm = NoiseSpec { temperature: 1.0, ..cold };
    assert!(matches!(noisy_spectrum(&undamped, &warm, 1e5, Execution::Sequential), Err(Error::Domain(_))));
    assert!(matches!(noisy_spectrum(&p, &warm, 100.0, Execution::Sequential), Err(Error::InsufficientSamples(_))));
}

#[test]
fn spectrum_split_examples() {
    let g = 0.01;
    let s = g / std::f64::consts::SQRT_2;
    let run = |rel: f64| {
        let p = NhParams::new(g, rel * s, 0.0).unwrap();
        let noise = NoiseSpec { temperature: 1.0, seed: 5, dt: 0.5, n_realizations: 64 };
        spectrum_split_detect(&p, &noise, 400.0 / g, Execution::Parallel).unwrap()
    };
    let below = run(0.5);
    assert!(!below.split);
    let above = run(1.3);
    assert!(above.split);
    // Peaks sit near the deterministic beat frequency sqrt(Omega^2 - gamma^2/4).
    let om = 1.3 * s;
    let beat = (om * om - g * g / 4.0).sqrt();
    assert_eq!(above.peak_freqs.len(), 2);
    for f in &above.peak_freqs {
        assert!((f.abs() - beat).abs() < 0.5 * beat, "{f} vs {beat}");
    }
    let sp = &above.spectrum;
    assert!(sp.resolution <= g / 10.0);
    assert!(sp.freq.windows(2).all(|w| w[1] > w[0]));
    // The stationary Lyapunov equation forces <|a1|^2> = <|a2|^2>, so the
    // integrated spectra agree up to sampling noise.
    let p1: f64 = sp.psd_a1.iter().sum();
    let p2: f64 = sp.psd_a2.iter().sum();
    assert!((p1 / p2 - 1.0).abs() < 0.1, "{p1} vs {p2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagation_is_a_semigroup(g in 0.0f64..2.0, om in 0.0f64..2.0, t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let p = NhParams::new(g, om, 0.4).unwrap();
        let init = [c(0.3, 0.4), c(-0.5, 0.2)];
        let mid = nh_propagate(&p, init, &[t1]);
        let two = nh_propagate(&p, [mid.a1[0], mid.a2[0]], &[t2]);
        let one = nh_propagate(&p, init, &[t1 + t2]);
        prop_assert!((two.a1[0] - one.a1[0]).norm() < 1e-9);
        prop_assert!((two.a2[0] - one.a2[0]).norm() < 1e-9);
    }

    #[test]
    fn single_reservoir_threshold(g in 1e-3f64..1e3, t in 1e-3f64..1e3) {
        let s = noisy_split_threshold(g, 0.0, t, 0.0).unwrap();
        prop_assert!((s - g / std::f64::consts::SQRT_2).abs() <= 1e-12 * g);
    }
}
