//! Turns parsed flags into a [`RunConfig`] and runs it into an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};
use sse_core::curve::{knee, max_slope_in, slope_spike};
use sse_core::dynamics::{project_initial, propagate, ratio_sweep, EnsembleSpec, RatioCurve};
use sse_core::estimator::estimator_sweep;
use sse_core::output::{self, num};
use sse_core::reduction::{
    default_sde_step, nh_propagate, nh_ratio_curve, noisy_split_bisect, noisy_split_threshold, spectrum_peak_offset,
    spectrum_split_detect, NhParams, NoiseSpec,
};
use sse_core::spectral::{component_profile, diagonalize_with, peak_features};
use sse_core::{build_matrix, Eigensolver, Execution, Head, InitialState, SystemParams};

use crate::args::{Command, OmegaUnit};
use crate::config::{
    check_n_list, check_omegas, default_grid, parse_grid, parse_pair, resolve_ensemble, resolve_horizon,
    resolve_omegas, resolve_params, Experiment, RunConfig,
};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::plot::{line_plot, Axes, Series};

/// Resolves the flags of any command but `rerun`.
pub fn configure(cmd: &Command) -> CliResult<(RunConfig, PathBuf)> {
    let (params, experiment, out) = match cmd {
        Command::Eigenprofile(a) => {
            let (p, fo) = resolve_params(&a.model)?;
            let omegas = resolve_omegas(&p, &a.omega, fo, &[0.5, 1.0, 1.5, 6.0])?;
            let n_list = if a.n_list.is_empty() { vec![p.n_bath] } else { a.n_list.clone() };
            check_n_list(&n_list)?;
            let solver = if a.dense { Eigensolver::Dense } else { Eigensolver::Arrowhead };
            (p, Experiment::Eigenprofile { omegas, n_list, solver }, &a.output)
        }
        Command::RatioSweep(a) | Command::Estimator(a) => {
            let (p, fo) = resolve_params(&a.model)?;
            let is_sweep = matches!(cmd, Command::RatioSweep(_));
            let grid = if is_sweep { default_grid(0.1, 4.0, 40) } else { default_grid(0.2, 4.0, 39) };
            let omegas = resolve_omegas(&p, &a.omega, fo, &grid)?;
            let t_max_tr = resolve_horizon(a.ensemble.t_max_tr, 25.0)?;
            let ensemble = resolve_ensemble(&a.ensemble)?;
            let e = if is_sweep {
                Experiment::RatioSweep { omegas, t_max_tr, ensemble }
            } else {
                Experiment::Estimator { omegas, t_max_tr, ensemble }
            };
            (p, e, &a.output)
        }
        Command::ScalingStudy(a) => {
            let s = &a.sweep;
            let (p, fo) = resolve_params(&s.model)?;
            let omegas = resolve_omegas(&p, &s.omega, fo, &default_grid(0.2, 2.0, 19))?;
            check_n_list(&a.n_list)?;
            let t_max_tr = resolve_horizon(s.ensemble.t_max_tr, 25.0)?;
            let ensemble = resolve_ensemble(&s.ensemble)?;
            (p, Experiment::ScalingStudy { omegas, n_list: a.n_list.clone(), t_max_tr, ensemble }, &s.output)
        }
        Command::NhCompare(a) => {
            let (p, _) = resolve_params(&a.model)?;
            let scale = if a.omega_unit == OmegaUnit::Sse { p.omega_sse() } else { 1.0 };
            let omega = a.omega * scale;
            let ratio_omegas: Vec<f64> = match &a.omega_grid {
                Some(g) => parse_grid(g)?.into_iter().map(|x| x * scale).collect(),
                None => default_grid(0.1, 2.0, 39).into_iter().map(|x| x * p.omega_sse()).collect(),
            };
            check_omegas(&[omega])?;
            check_omegas(&ratio_omegas)?;
            let t_max_tr = resolve_horizon(Some(a.t_max_tr), 0.0)?;
            let ratio_t_max_tr = resolve_horizon(Some(a.ratio_t_max_tr), 0.0)?;
            if a.samples == 0 {
                return Err(CliError::Config("--samples must be at least 1".into()));
            }
            (p, Experiment::NhCompare { omega, t_max_tr, samples: a.samples, ratio_omegas, ratio_t_max_tr }, &a.output)
        }
        Command::NoiseSpectrum(a) => {
            let (p, fo) = resolve_params(&a.model)?;
            if !(a.temperature > 0.0) {
                return Err(CliError::Config(format!(
                    "noise-free spectrum estimation refused: temperature must be positive, got {}",
                    a.temperature
                )));
            }
            if !(p.gamma() > 0.0) {
                return Err(CliError::Config("noise spectra need gamma > 0 (g > 0)".into()));
            }
            if a.realizations == 0 {
                return Err(CliError::Config("--realizations must be at least 1".into()));
            }
            let omegas = resolve_omegas(&p, &a.omega, fo, &default_grid(0.5, 1.5, 11))?;
            let scale = if a.omega.omega_unit == OmegaUnit::Sse { p.omega_sse() } else { 1.0 };
            let bisect = if a.no_bisect {
                None
            } else {
                let (lo, hi) = parse_pair(&a.bisect)?;
                if !(a.tol > 0.0) {
                    return Err(CliError::Config("--tol must be positive".into()));
                }
                Some((lo * scale, hi * scale, a.tol * p.omega_sse()))
            };
            let top = omegas.iter().copied().chain(bisect.map(|b| b.1)).fold(0.0, f64::max);
            let nh = NhParams::from_system(&p);
            let dt = a.dt.unwrap_or_else(|| default_sde_step(&nh.with_omega(top), 0.5));
            if !(a.t_max_gamma > 0.0) {
                return Err(CliError::Config("--t-max-gamma must be positive".into()));
            }
            let e = Experiment::NoiseSpectrum {
                omegas,
                temperature: a.temperature,
                realizations: a.realizations,
                seed: a.seed,
                t_max: a.t_max_gamma / p.gamma(),
                dt,
                bisect,
            };
            (p, e, &a.output)
        }
        Command::Rerun(_) => unreachable!("rerun is resolved from its manifest"),
    };
    Ok((RunConfig { params, svg: out.svg, experiment }, out.out_dir.clone()))
}

/// Loads a manifest for `rerun`.
pub fn configure_rerun(manifest: &Path, out_dir: Option<&Path>) -> CliResult<(RunConfig, PathBuf)> {
    let m = RunManifest::read(manifest)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| RunManifest::default_dir(manifest));
    Ok((m.config, dir))
}

struct Ctx<'a> {
    dir: &'a Path,
    hash: String,
    svg: bool,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn comments(&self, what: &str) -> Vec<String> {
        vec![format!("config-sha256: {}", self.hash), what.to_string()]
    }

    fn write<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(CliError::io(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        let mut value = value.clone();
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_sha256".into(), Value::String(self.hash.clone()));
        }
        let text = serde_json::to_string_pretty(&value).expect("json serializes") + "\n";
        self.write(name, |w| w.write_all(text.as_bytes()))
    }

    fn plot(&mut self, name: &str, axes: Axes, series: &[Series]) -> CliResult<()> {
        if !self.svg {
            return Ok(());
        }
        let path = self.dir.join(name);
        line_plot(&path, &axes, series)?;
        let svg = fs::read_to_string(&path).map_err(CliError::io(&path))?;
        fs::write(&path, format!("<!-- config-sha256: {} -->\n{svg}", self.hash)).map_err(CliError::io(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn exec() -> Execution {
    if Execution::parallel_available() {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn progress(cmd: &str, msg: impl AsRef<str>) {
    eprintln!("[{cmd}] {}", msg.as_ref());
}

/// Runs `config` into `dir`: manifest first, then data files, then the
/// completed manifest. Returns the manifest and a command summary.
pub fn execute(config: &RunConfig, dir: &Path) -> CliResult<(RunManifest, Value)> {
    if config.svg && !cfg!(feature = "svg") {
        return Err(CliError::Config("--svg requested but this build has no SVG support".into()));
    }
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut manifest = RunManifest::new(config, threads())?;
    manifest.write(dir)?;
    let mut ctx = Ctx { dir, hash: manifest.config_sha256.clone(), svg: config.svg, outputs: Vec::new(), warnings: Vec::new() };
    let p = &config.params;
    let summary = match &config.experiment {
        Experiment::Eigenprofile { omegas, n_list, solver } => eigenprofile(&mut ctx, p, omegas, n_list, *solver)?,
        Experiment::RatioSweep { omegas, t_max_tr, ensemble } => ratio(&mut ctx, p, omegas, *t_max_tr, ensemble)?,
        Experiment::ScalingStudy { omegas, n_list, t_max_tr, ensemble } => {
            scaling(&mut ctx, p, omegas, n_list, *t_max_tr, ensemble)?
        }
        Experiment::NhCompare { omega, t_max_tr, samples, ratio_omegas, ratio_t_max_tr } => {
            nh_compare(&mut ctx, p, *omega, *t_max_tr, *samples, ratio_omegas, *ratio_t_max_tr)?
        }
        Experiment::NoiseSpectrum { omegas, temperature, realizations, seed, t_max, dt, bisect } => {
            let noise = NoiseSpec { temperature: *temperature, seed: *seed, dt: *dt, n_realizations: *realizations };
            noise_spectrum(&mut ctx, p, omegas, &noise, *t_max, *bisect)?
        }
        Experiment::Estimator { omegas, t_max_tr, ensemble } => estimator(&mut ctx, p, omegas, *t_max_tr, ensemble)?,
    };
    manifest.outputs = ctx.outputs;
    manifest.warnings = ctx.warnings;
    manifest.finish();
    manifest.write(dir)?;
    Ok((manifest, summary))
}

fn at_size(p: &SystemParams, n: usize) -> CliResult<SystemParams> {
    Ok(p.scale_to(n)?)
}

fn rel(p: &SystemParams, xy: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let s = p.omega_sse();
    xy.iter().map(|&(x, y)| (x / s, y)).collect()
}

fn eigenprofile(ctx: &mut Ctx, p: &SystemParams, omegas: &[f64], n_list: &[usize], solver: Eigensolver) -> CliResult<Value> {
    let mut rows = Vec::new();
    for &n in n_list {
        let pn = at_size(p, n)?;
        for (i, &omega) in omegas.iter().enumerate() {
            progress("eigenprofile", format!("N={n}, Omega/Omega_SSE={:.4}", omega / pn.omega_sse()));
            let q = pn.with_omega(omega);
            let basis = diagonalize_with(&build_matrix(&q)?, solver)?;
            let stem = format!("eigenprofile_n{n}_w{i:02}");
            let what = format!("eigenprofile N={n} omega={}", num(omega));
            let comments = ctx.comments(&what);
            ctx.write(&format!("{stem}.csv"), |w| output::write_eigenprofile(w, &comments, &basis))?;
            let f1 = peak_features(&component_profile(&basis, Head::One))?;
            let f2 = peak_features(&component_profile(&basis, Head::Two))?;
            let side = json!({
                "n_bath": n,
                "omega": omega,
                "omega_over_sse": omega / q.omega_sse(),
                "component1": f1,
                "component2": f2,
            });
            ctx.json(&format!("{stem}_features.json"), &side)?;
            let prof = |j| component_profile(&basis, j).points;
            ctx.plot(
                &format!("{stem}.svg"),
                Axes { title: &what, x: "f_k", y: "(e_k)_j", log_y: false },
                &[Series { name: "e1", points: prof(Head::One) }, Series { name: "e2", points: prof(Head::Two) }],
            )?;
            rows.push(json!({"n_bath": n, "omega": omega, "peaks1": f1.peak_count, "peaks2": f2.peak_count}));
        }
    }
    Ok(json!({ "profiles": rows }))
}

fn write_curve(ctx: &mut Ctx, name: &str, what: &str, curve: &RatioCurve) -> CliResult<()> {
    let comments = ctx.comments(what);
    ctx.write(name, |w| output::write_ratio_curve(w, &comments, curve))
}

fn ratio(ctx: &mut Ctx, p: &SystemParams, omegas: &[f64], t_max_tr: f64, ensemble: &EnsembleSpec) -> CliResult<Value> {
    progress("ratio-sweep", format!("N={}, {} couplings, {} states, t_max={t_max_tr} T_R", p.n_bath, omegas.len(), ensemble.size()));
    let curve = ratio_sweep(p, omegas, t_max_tr, ensemble, exec())?;
    write_curve(ctx, "ratio.csv", &format!("ratio sweep N={}", p.n_bath), &curve)?;
    let xy = rel(p, &curve.xy());
    ctx.plot(
        "ratio.svg",
        Axes { title: "averaged amplitude ratio", x: "Omega / Omega_SSE", y: "<|a1|>/<|a2|>", log_y: false },
        &[Series { name: "ratio", points: xy.clone() }],
    )?;
    Ok(json!({ "knee_over_sse": knee(&xy).ok() }))
}

fn scaling(
    ctx: &mut Ctx,
    p: &SystemParams,
    omegas: &[f64],
    n_list: &[usize],
    t_max_tr: f64,
    ensemble: &EnsembleSpec,
) -> CliResult<Value> {
    let mut sharp = Vec::new();
    let mut series = Vec::new();
    for &n in n_list {
        let pn = at_size(p, n)?;
        progress("scaling-study", format!("N={n}, {} couplings", omegas.len()));
        let curve = ratio_sweep(&pn, omegas, t_max_tr, ensemble, exec())?;
        write_curve(ctx, &format!("ratio_n{n}.csv"), &format!("ratio sweep N={n}"), &curve)?;
        let xy = rel(&pn, &curve.xy());
        sharp.push((n, max_slope_in(&xy, 0.5, 1.5)));
        series.push((format!("N={n}"), xy));
    }
    let comments = ctx.comments("max finite-difference slope of the ratio over Omega/Omega_SSE in [0.5, 1.5]");
    ctx.write("sharpness.csv", |w| {
        writeln!(w, "# {}", comments[0])?;
        writeln!(w, "# {}", comments[1])?;
        writeln!(w, "n_bath,max_slope")?;
        for (n, s) in &sharp {
            writeln!(w, "{n},{}", s.map_or_else(|| "nan".to_string(), num))?;
        }
        Ok(())
    })?;
    let mut sorted = sharp.clone();
    sorted.sort_by_key(|s| s.0);
    if sorted.iter().any(|s| s.1.is_none()) {
        ctx.warnings.push("sharpness undefined: no grid segment inside [0.5, 1.5] Omega_SSE".into());
    } else if sorted.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        let list: Vec<String> = sorted.iter().map(|(n, s)| format!("N={n}: {:.4}", s.unwrap_or(f64::NAN))).collect();
        ctx.warnings.push(format!("sharpness is not monotone in N ({})", list.join(", ")));
    }
    let named: Vec<Series> = series.iter().map(|(name, pts)| Series { name, points: pts.clone() }).collect();
    ctx.plot(
        "scaling.svg",
        Axes { title: "ratio sweeps by bath size", x: "Omega / Omega_SSE", y: "<|a1|>/<|a2|>", log_y: false },
        &named,
    )?;
    Ok(json!({ "sharpness": sharp.iter().map(|(n, s)| json!({"n_bath": n, "max_slope": s})).collect::<Vec<_>>() }))
}

fn nh_compare(
    ctx: &mut Ctx,
    p: &SystemParams,
    omega: f64,
    t_max_tr: f64,
    samples: usize,
    ratio_omegas: &[f64],
    ratio_t_max_tr: f64,
) -> CliResult<Value> {
    let q = p.with_omega(omega);
    let t_r = q.t_return();
    progress("nh-compare", format!("trajectories at Omega/Omega_SSE={:.4} over {t_max_tr} T_R", omega / q.omega_sse()));
    let basis = sse_core::diagonalize(&build_matrix(&q)?)?;
    let one = Complex64::new(1.0, 0.0);
    let co = project_initial(&basis, &InitialState::head(one, one, q.n_bath))?;
    let t_max = t_max_tr * t_r;
    let times: Vec<f64> = (0..=samples).map(|i| if i == samples { t_max } else { t_max * i as f64 / samples as f64 }).collect();
    let full = propagate(&basis, &co, &times)?;
    let nh = nh_propagate(&NhParams::from_system(&q), [one, one], &times);
    let dev: Vec<f64> = (0..times.len())
        .map(|i| (full.a1[i].norm() - nh.a1[i].norm()).abs().max((full.a2[i].norm() - nh.a2[i].norm()).abs()))
        .collect();
    let comments = ctx.comments(&format!("full N={} vs reduced model, init (1,1), omega={}", q.n_bath, num(omega)));
    ctx.write("nh_trajectory.csv", |w| {
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t,abs_a1_full,abs_a2_full,abs_a1_nh,abs_a2_nh,deviation")?;
        for i in 0..times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                num(times[i]),
                num(full.a1[i].norm()),
                num(full.a2[i].norm()),
                num(nh.a1[i].norm()),
                num(nh.a2[i].norm()),
                num(dev[i])
            )?;
        }
        Ok(())
    })?;
    let window_max = |lo: f64, hi: f64| {
        times.iter().zip(&dev).filter(|(t, _)| **t >= lo * t_r && **t <= hi * t_r).map(|(_, d)| *d).reduce(f64::max)
    };

    progress("nh-compare", format!("ratio overlay, {} couplings, t_max={ratio_t_max_tr} T_R", ratio_omegas.len()));
    let full_curve = ratio_sweep(p, ratio_omegas, ratio_t_max_tr, &EnsembleSpec::EigenPlus, exec())?;
    let nh_curve = nh_ratio_curve(p, ratio_omegas, ratio_t_max_tr)?;
    let comments = ctx.comments(&format!("ratio with init e+, t_max={} T_R", num(ratio_t_max_tr)));
    ctx.write("nh_ratio.csv", |w| {
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "omega,ratio_full,ratio_nh")?;
        for (a, b) in full_curve.points.iter().zip(&nh_curve.points) {
            writeln!(w, "{},{},{}", num(a.omega), num(a.ratio), num(b.ratio))?;
        }
        Ok(())
    })?;
    let s = q.omega_sse();
    ctx.plot(
        "nh_trajectory.svg",
        Axes { title: "full vs reduced amplitudes", x: "t / T_R", y: "|a_j|", log_y: false },
        &[
            Series { name: "|a1| full", points: times.iter().zip(&full.a1).map(|(t, a)| (t / t_r, a.norm())).collect() },
            Series { name: "|a2| full", points: times.iter().zip(&full.a2).map(|(t, a)| (t / t_r, a.norm())).collect() },
            Series { name: "|a1| reduced", points: times.iter().zip(&nh.a1).map(|(t, a)| (t / t_r, a.norm())).collect() },
            Series { name: "|a2| reduced", points: times.iter().zip(&nh.a2).map(|(t, a)| (t / t_r, a.norm())).collect() },
        ],
    )?;
    ctx.plot(
        "nh_ratio.svg",
        Axes { title: "ratio with init e+", x: "Omega / Omega_SSE", y: "<|a1|>/<|a2|>", log_y: false },
        &[
            Series { name: "full", points: full_curve.points.iter().map(|p| (p.omega / s, p.ratio)).collect() },
            Series { name: "reduced", points: nh_curve.points.iter().map(|p| (p.omega / s, p.ratio)).collect() },
        ],
    )?;
    Ok(json!({
        "max_deviation_0_to_0.3_TR": window_max(0.0, 0.3),
        "max_deviation_1_to_2_TR": window_max(1.0, 2.0),
        "knee_full_over_sse": knee(&rel(p, &full_curve.xy())).ok(),
    }))
}

fn noise_spectrum(
    ctx: &mut Ctx,
    p: &SystemParams,
    omegas: &[f64],
    noise: &NoiseSpec,
    t_max: f64,
    bisect: Option<(f64, f64, f64)>,
) -> CliResult<Value> {
    let nh = NhParams::from_system(p);
    let s = p.omega_sse();
    let mut scan = Vec::new();
    for (i, &omega) in omegas.iter().enumerate() {
        progress("noise-spectrum", format!("Omega/Omega_SSE={:.4}, {} realizations", omega / s, noise.n_realizations));
        let q = nh.with_omega(omega);
        let report = spectrum_split_detect(&q, noise, t_max, exec())?;
        let comments = ctx.comments(&format!("noise spectrum omega={}", num(omega)));
        ctx.write(&format!("spectrum_w{i:02}.csv"), |w| output::write_spectrum(w, &comments, &report.spectrum))?;
        let sp = &report.spectrum;
        ctx.plot(
            &format!("spectrum_w{i:02}.svg"),
            Axes { title: &format!("PSD at Omega/Omega_SSE = {:.3}", omega / s), x: "frequency", y: "PSD", log_y: true },
            &[
                Series { name: "a1", points: sp.freq.iter().copied().zip(sp.psd_a1.iter().copied()).collect() },
                Series { name: "a2", points: sp.freq.iter().copied().zip(sp.psd_a2.iter().copied()).collect() },
            ],
        )?;
        let fit_offset = report.peak_freqs.last().map(|f| f - q.omega0);
        scan.push((omega, report.split, report.half_height_double, report.fit, fit_offset, spectrum_peak_offset(&q)));
    }
    let comments = ctx.comments("split test on oscillator 2: 1/S = c0 + c1 x^2 + c2 x^4, x = (f - omega0)/gamma");
    ctx.write("noise_scan.csv", |w| {
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "omega,split,half_height_double,c0,c1,c2,peak_offset_fit,peak_offset_analytic")?;
        for (omega, split, hh, fit, off, an) in &scan {
            let off = off.map_or_else(|| "nan".to_string(), num);
            writeln!(w, "{},{},{},{},{},{},{},{}", num(*omega), split, hh, num(fit[0]), num(fit[1]), num(fit[2]), off, num(*an))?;
        }
        Ok(())
    })?;

    let formula = noisy_split_threshold(nh.gamma, 0.0, noise.temperature, 0.0)?;
    let detected = match bisect {
        Some((lo, hi, tol)) => {
            progress("noise-spectrum", format!("bisecting the split onset in [{:.3}, {:.3}] Omega_SSE", lo / s, hi / s));
            Some(noisy_split_bisect(&nh, noise, t_max, lo, hi, tol, exec())?)
        }
        None => None,
    };
    let report = json!({
        "gamma": nh.gamma,
        "temperature": noise.temperature,
        "realizations": noise.n_realizations,
        "seed": noise.seed,
        "dt": noise.dt,
        "t_max": t_max,
        "detected_omega_split": detected,
        "formula_omega_split": formula,
        "relative_deviation": detected.map(|d| d / formula - 1.0),
    });
    ctx.json("noise_report.json", &report)?;
    Ok(report)
}

fn estimator(ctx: &mut Ctx, p: &SystemParams, omegas: &[f64], t_max_tr: f64, ensemble: &EnsembleSpec) -> CliResult<Value> {
    progress("estimator", format!("N={}, {} couplings, t_max={t_max_tr} T_R", p.n_bath, omegas.len()));
    let rows = estimator_sweep(p, omegas, t_max_tr, ensemble, exec())?;
    let comments = ctx.comments(&format!("estimators N={}", p.n_bath));
    ctx.write("estimator.csv", |w| output::write_estimator(w, &comments, &rows))?;
    let s = p.omega_sse();
    let col = |f: &dyn Fn(&sse_core::estimator::EstimatorRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.omega / s, f(r))).collect()
    };
    let (full, nc, nxi, st, pk) = (
        col(&|r| r.ratio_full),
        col(&|r| r.ratio_no_cross),
        col(&|r| r.ratio_no_xi),
        col(&|r| r.ratio_static),
        col(&|r| r.ratio_peak),
    );
    ctx.plot(
        "estimator.svg",
        Axes { title: "ratio estimators", x: "Omega / Omega_SSE", y: "ratio", log_y: false },
        &[
            Series { name: "full", points: full.clone() },
            Series { name: "no cross terms", points: nc.clone() },
            Series { name: "no xi", points: nxi },
            Series { name: "static", points: st.clone() },
            Series { name: "peak", points: pk },
        ],
    )?;
    let worst = rows.iter().map(|r| (r.ratio_no_cross / r.ratio_full - 1.0).abs()).fold(0.0, f64::max);
    Ok(json!({
        "knee_no_cross_over_sse": knee(&nc).ok(),
        "static_slope_spike": slope_spike(&st, 0.5, 1.5),
        "max_rel_gap_no_cross_vs_full": worst,
    }))
}
