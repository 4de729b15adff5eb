//! Acceptance checks, one line per criterion. Exits nonzero if any fails.
//!
//! Run with `cargo test -p sse-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use sse_core::curve::{knee, max_slope_in, slope_spike};
use sse_core::dynamics::{
    ensemble_ratio, integrate_ode_with, project_initial, propagate, propagate_full, ratio_sweep, EnsembleSpec,
    OdeOptions,
};
use sse_core::estimator::estimator_sweep;
use sse_core::reduction::{
    default_sde_step, nh_eigensystem, nh_propagate, noisy_split_bisect, noisy_split_threshold, NhParams, NoiseSpec,
};
use sse_core::spectral::find_split_threshold;
use sse_core::{build_matrix, diagonalize, Execution, InitialState, SystemParams};

type Outcome = Result<(bool, String), String>;

fn defaults(n: usize) -> SystemParams {
    SystemParams::from_band(400, 1.0, 0.01, 0.0, 0.0).unwrap().scale_to(n).unwrap()
}

fn exec() -> Execution {
    Execution::default()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Relative grid `lo, lo + step, ...` up to `hi`, built from integers.
fn rel_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn criterion_1() -> Outcome {
    let p = defaults(400);
    let s = p.omega_sse();
    let clock = Instant::now();
    let w = find_split_threshold(&p, 0.3 * s, 3.0 * s, 1e-3 * s).map_err(e)?;
    let secs = clock.elapsed().as_secs_f64();
    let rel = w / s;
    let ok = (0.9..=1.1).contains(&rel) && secs < 60.0;
    Ok((ok, format!("threshold {rel:.4} Omega_SSE (window [0.9, 1.1]) in {secs:.2} s")))
}

fn criterion_2() -> Outcome {
    let clock = Instant::now();
    let p = defaults(400);
    let s = p.omega_sse();
    let t_max = 25.0 * p.t_return();
    let (low, _) = ensemble_ratio(&p.with_omega(0.25 * s), 200, t_max, 1).map_err(e)?;
    let (high, _) = ensemble_ratio(&p.with_omega(2.0 * s), 200, t_max, 1).map_err(e)?;
    let spec = EnsembleSpec::Random { n_states: 200, seed: 1 };
    let grid = rel_grid(0.2, 2.0, 0.1);
    let mut sharp = Vec::new();
    for n in [50, 100, 200, 400] {
        let pn = defaults(n);
        let omegas: Vec<f64> = grid.iter().map(|x| x * pn.omega_sse()).collect();
        let curve = ratio_sweep(&pn, &omegas, 25.0, &spec, exec()).map_err(e)?;
        let xy: Vec<(f64, f64)> = grid.iter().copied().zip(curve.points.iter().map(|q| q.ratio)).collect();
        sharp.push(max_slope_in(&xy, 0.5, 1.5).ok_or("no slope in window")?);
    }
    let monotone = sharp.windows(2).all(|w| w[1] > w[0]);
    let ok = low < 0.8 && (0.9..=1.1).contains(&high) && monotone;
    let list: Vec<String> = sharp.iter().map(|x| format!("{x:.3}")).collect();
    Ok((
        ok,
        format!(
            "ratio {low:.4} at 0.25 (< 0.8), {high:.4} at 2.0 ([0.9, 1.1]); sharpness N=50/100/200/400 {} ({}); {:.0} s",
            list.join("/"),
            if monotone { "increasing" } else { "not increasing" },
            clock.elapsed().as_secs_f64()
        ),
    ))
}

fn criterion_3() -> Outcome {
    let p = defaults(400);
    let s = p.omega_sse();
    let grid = rel_grid(0.3, 1.8, 0.05);
    let omegas: Vec<f64> = grid.iter().map(|x| x * s).collect();
    let knee_at = |t: f64| -> Result<f64, String> {
        let curve = ratio_sweep(&p, &omegas, t, &EnsembleSpec::EigenPlus, exec()).map_err(e)?;
        knee(&curve.xy()).map_err(e)
    };
    let short = knee_at(0.5)? / p.omega_ep();
    let long = knee_at(10.0)? / s;
    let ok_short = (0.85..=1.15).contains(&short);
    let ok_long = (0.85..=1.15).contains(&long);
    Ok((
        ok_short && ok_long,
        format!(
            "knee at 0.5 T_R = {short:.3} gamma/2 ({}); at 10 T_R = {long:.3} Omega_SSE ({})",
            if ok_short { "ok" } else { "outside +-15%" },
            if ok_long { "ok" } else { "outside +-15%" }
        ),
    ))
}

fn criterion_4() -> Outcome {
    let gamma = 0.01;
    let mut worst_re = 0.0f64;
    let mut worst_im = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for w0 in [0.0, 1.0, 37.5] {
        for i in 1..=400 {
            let om = gamma * i as f64 / 100.0;
            let sys = nh_eigensystem(&NhParams::new(gamma, om, w0).map_err(e)?);
            if om > gamma / 2.0 {
                for l in [sys.lambda_plus, sys.lambda_minus] {
                    worst_re = worst_re.max((l.re + gamma / 2.0).abs());
                }
            } else if om < gamma / 2.0 {
                for l in [sys.lambda_plus, sys.lambda_minus] {
                    worst_im = worst_im.max((l.im + w0).abs());
                }
            }
            if om >= gamma / 2.0 {
                for v in [sys.e_plus, sys.e_minus] {
                    worst_ratio = worst_ratio.max((v[0].norm() / v[1].norm() - 1.0).abs());
                }
            }
        }
    }
    let split = noisy_split_threshold(gamma, 0.0, 1.0, 0.0).map_err(e)?;
    let split_err = (split - gamma / 2f64.sqrt()).abs() / gamma;
    let ok = worst_re <= 1e-12 && worst_im <= 1e-12 && worst_ratio <= 1e-12 && split_err <= 1e-12;
    Ok((
        ok,
        format!("|Re+g/2| {worst_re:.1e}, |Im+w0| {worst_im:.1e}, ratio-1 {worst_ratio:.1e}, split formula {split_err:.1e}"),
    ))
}

fn criterion_5() -> Outcome {
    let p = defaults(50);
    let p = p.with_omega(0.8 * p.omega_sse());
    let t_r = p.t_return();
    let init = InitialState::head(c(0.6, 0.2), c(-0.3, 0.7), 50);
    let ode = integrate_ode_with(&p, &init, t_r, t_r / 1e6, OdeOptions { stride: 1000, record_bath: false }).map_err(e)?;
    let basis = diagonalize(&build_matrix(&p).map_err(e)?).map_err(e)?;
    let co = project_initial(&basis, &init).map_err(e)?;
    let spec = propagate(&basis, &co, &ode.times).map_err(e)?;
    let dev = ode
        .a1
        .iter()
        .zip(&spec.a1)
        .chain(ode.a2.iter().zip(&spec.a2))
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);

    let q = defaults(400);
    let q = q.with_omega(1.3 * q.omega_sse());
    let basis = diagonalize(&build_matrix(&q).map_err(e)?).map_err(e)?;
    let mut bath = vec![c(0.0, 0.0); 400];
    bath[123] = c(0.2, -0.1);
    let init = InitialState { a1: c(0.7, 0.1), a2: c(0.0, 0.6), bath };
    let n0 = init.norm_sqr();
    let co = project_initial(&basis, &init).map_err(e)?;
    let times: Vec<f64> = (0..=500).map(|i| i as f64 * 0.05 * q.t_return()).collect();
    let full = propagate_full(&basis, &co, &times).map_err(e)?;
    let drift = full.norm_sq.ok_or("no norm recorded")?.iter().map(|x| (x - n0).abs() / n0).fold(0.0, f64::max);
    let ok = dev <= 1e-6 && drift <= 1e-10;
    Ok((ok, format!("spectral vs RK4 on [0, T_R] at N=50: {dev:.2e} (<= 1e-6); norm drift over 25 T_R: {drift:.2e} (<= 1e-10)")))
}

fn criterion_6() -> Outcome {
    let p = defaults(400);
    let p = p.with_omega(0.5 * p.omega_sse());
    let t_r = p.t_return();
    let basis = diagonalize(&build_matrix(&p).map_err(e)?).map_err(e)?;
    let one = c(1.0, 0.0);
    let co = project_initial(&basis, &InitialState::head(one, one, 400)).map_err(e)?;
    let times: Vec<f64> = (0..=4000).map(|i| 2.0 * t_r * i as f64 / 4000.0).collect();
    let full = propagate(&basis, &co, &times).map_err(e)?;
    let nh = nh_propagate(&NhParams::from_system(&p), [one, one], &times);
    let dev: Vec<f64> = (0..times.len())
        .map(|i| (full.a1[i].norm() - nh.a1[i].norm()).abs().max((full.a2[i].norm() - nh.a2[i].norm()).abs()))
        .collect();
    let window = |lo: f64, hi: f64| {
        times.iter().zip(&dev).filter(|(t, _)| **t >= lo * t_r && **t <= hi * t_r).map(|(_, d)| *d).fold(0.0, f64::max)
    };
    let early = window(0.0, 0.3);
    let late = window(1.0, 2.0);
    Ok((
        early <= 0.05 && late > 0.2,
        format!("max deviation {early:.4} on [0, 0.3 T_R] (<= 0.05), {late:.4} on [T_R, 2 T_R] (> 0.2)"),
    ))
}

fn criterion_7() -> Outcome {
    let clock = Instant::now();
    let p = defaults(200);
    let s = p.omega_sse();
    let grid = rel_grid(0.2, 4.0, 0.1);
    let omegas: Vec<f64> = grid.iter().map(|x| x * s).collect();
    let rows = estimator_sweep(&p, &omegas, 25.0, &EnsembleSpec::Random { n_states: 200, seed: 1 }, exec()).map_err(e)?;
    let gap = rows.iter().map(|r| (r.ratio_no_cross / r.ratio_full - 1.0).abs()).fold(0.0, f64::max);
    let upper: Vec<_> = rows.iter().zip(&grid).filter(|(_, x)| **x >= 1.5 - 1e-9).map(|(r, x)| (*x, r)).collect();
    let (worst_x, worst_peak) = upper
        .iter()
        .map(|(x, r)| (*x, (r.ratio_peak - 1.0).abs()))
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let height = upper.iter().map(|(_, r)| (r.height_ratio() - 1.0).abs()).fold(0.0, f64::max);
    let static_xy: Vec<(f64, f64)> = grid.iter().copied().zip(rows.iter().map(|r| r.ratio_static)).collect();
    let spike = slope_spike(&static_xy, 0.5, 1.5).ok_or("no slope in window")?;
    let ok_nc = gap <= 0.1;
    let ok_peak = worst_peak <= 0.1 && height >= 0.1;
    let ok_static = spike <= 3.0;
    Ok((
        ok_nc && ok_peak && ok_static,
        format!(
            "no-cross gap {gap:.4} (<= 0.1); peak estimator worst |r-1| {worst_peak:.3} at {worst_x:.1} Omega_SSE (<= 0.1), \
             max |P1/P2-1| {height:.3} (>= 0.1); static slope spike {spike:.2} (<= 3); {:.0} s",
            clock.elapsed().as_secs_f64()
        ),
    ))
}

fn criterion_8() -> Outcome {
    let clock = Instant::now();
    let p = defaults(400);
    let nh = NhParams::from_system(&p);
    let s = p.omega_sse();
    let noise = NoiseSpec { temperature: 1.0, seed: 3, dt: default_sde_step(&nh.with_omega(1.5 * s), 0.5), n_realizations: 64 };
    let w = noisy_split_bisect(&nh, &noise, 400.0 / nh.gamma, 0.5 * s, 1.5 * s, 0.01 * s, exec()).map_err(e)?;
    let rel = w / s;
    let secs = clock.elapsed().as_secs_f64();
    Ok(((0.85..=1.15).contains(&rel) && secs < 600.0, format!("split onset {rel:.4} Omega_SSE (window [0.85, 1.15]) in {secs:.1} s")))
}

fn run_cli(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sse-lab"))
        .args(args)
        .env("SSE_LAB_THREADS", threads)
        .output()
        .map_err(e)?;
    if !out.status.success() {
        return Err(format!("sse-lab {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn csv_files(dir: &Path) -> Result<Vec<String>, String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(e)?
        .filter_map(|d| d.ok().map(|d| d.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.ends_with(".csv") || n == "config.json")
        .collect();
    names.sort();
    Ok(names)
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let runs: [(&str, &[&str]); 6] = [
        ("eigenprofile", &["--n-bath", "60", "--omega", "0.5,1.5"]),
        ("ratio-sweep", &["--n-bath", "60", "--omega-grid", "0.2:2:7", "--ensemble", "16", "--t-max-tr", "3", "--seed", "9"]),
        (
            "scaling-study",
            &["--n-list", "30,60", "--omega-grid", "0.2:2:7", "--ensemble", "8", "--t-max-tr", "2", "--seed", "4"],
        ),
        ("nh-compare", &["--n-bath", "60", "--samples", "200", "--omega-grid", "0.2:2:5"]),
        (
            "noise-spectrum",
            &["--omega", "0.5,1.3", "--realizations", "8", "--t-max-gamma", "150", "--seed", "11", "--no-bisect"],
        ),
        ("estimator", &["--n-bath", "60", "--omega-grid", "0.2:3:6", "--ensemble", "16", "--t-max-tr", "3", "--seed", "2"]),
    ];
    let mut checked = 0;
    let mut bad = Vec::new();
    for (cmd, extra) in runs {
        let first = tmp.path().join(cmd);
        let second = tmp.path().join(format!("{cmd}-rerun"));
        let mut args = vec![cmd, "--out-dir", first.to_str().unwrap()];
        args.extend_from_slice(extra);
        run_cli(&args, "1")?;
        let manifest = first.join("manifest.json");
        run_cli(&["rerun", "--manifest", manifest.to_str().unwrap(), "--out-dir", second.to_str().unwrap()], "2")?;
        let files = csv_files(&first)?;
        if files.len() < 2 {
            bad.push(format!("{cmd}: no data files"));
        }
        for f in files {
            let a = std::fs::read(first.join(&f)).map_err(e)?;
            let b = std::fs::read(second.join(&f)).map_err(|err| format!("{cmd}/{f}: {err}"))?;
            checked += 1;
            if a != b {
                bad.push(format!("{cmd}/{f}"));
            }
        }
    }
    Ok((bad.is_empty(), format!("{checked} files across 6 commands byte-identical on rerun{}", fmt_bad(&bad))))
}

fn fmt_bad(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; differing: {}", bad.join(", "))
    }
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored.
    let checks: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for (i, check) in checks.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {}: {} - {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
