//! The Markovian 2x2 reduction: oscillator 1 decays at rate `gamma` into an
//! unresolved bath, oscillator 2 only talks to oscillator 1.
//!
//! Generator `M = [[-i w0 - gamma, -i Omega], [-i Omega, -i w0]]`, so that
//! `da/dt = M a (+ noise on a1)`. Its eigenvalues are
//! `-gamma/2 - i w0 +- sqrt(gamma^2 - 4 Omega^2) / 2`, coalescing at
//! `Omega = gamma / 2`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::curve::bisect_transition;
use crate::dynamics::{RatioCurve, RatioPoint, TimeGrid};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::par::{self, Execution};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative distance to the EP inside which propagation switches to the
/// Jordan-form exponential.
pub const EP_WINDOW: f64 = 1e-6;
/// Bound on `gamma dt` and `Omega dt` for Euler-Maruyama.
pub const SDE_STEP_LIMIT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NhParams {
    pub gamma: f64,
    pub omega_big: f64,
    #[serde(default)]
    pub omega0: f64,
}

impl NhParams {
    pub fn new(gamma: f64, omega_big: f64, omega0: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be non-negative, got {gamma}")));
        }
        if !omega_big.is_finite() || !omega0.is_finite() {
            return Err(Error::InvalidParams("couplings must be finite".into()));
        }
        Ok(Self { gamma, omega_big, omega0 })
    }

    /// The reduction of a finite-bath system: same `Omega`, `omega0`, and
    /// `gamma = pi g^2 / dw`.
    pub fn from_system(p: &SystemParams) -> Self {
        Self { gamma: p.gamma(), omega_big: p.omega_big, omega0: p.omega0 }
    }

    pub fn with_omega(&self, omega_big: f64) -> Self {
        Self { omega_big, ..*self }
    }

    pub fn generator(&self) -> [[Complex64; 2]; 2] {
        let w = Complex64::new(0.0, -self.omega0);
        let c = Complex64::new(0.0, -self.omega_big);
        [[w - self.gamma, c], [c, w]]
    }

    fn near_ep(&self) -> bool {
        self.gamma > 0.0 && (self.omega_big - 0.5 * self.gamma).abs() < EP_WINDOW * self.gamma
    }
}

/// Eigenvalues and (unnormalised, second component 1) eigenvectors.
/// `+` is the slowly decaying branch below the EP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NhEigensystem {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub e_plus: [Complex64; 2],
    pub e_minus: [Complex64; 2],
}

impl NhEigensystem {
    /// `|(e+)_1| / |(e+)_2|`.
    pub fn plus_ratio(&self) -> f64 {
        self.e_plus[0].norm() / self.e_plus[1].norm()
    }
}

pub fn nh_eigensystem(p: &NhParams) -> NhEigensystem {
    let (g, om, w0) = (p.gamma, p.omega_big, p.omega0);
    if om == 0.0 {
        return NhEigensystem {
            lambda_plus: Complex64::new(0.0, -w0),
            lambda_minus: Complex64::new(-g, -w0),
            e_plus: [ZERO, Complex64::new(1.0, 0.0)],
            e_minus: [Complex64::new(1.0, 0.0), ZERO],
        };
    }
    let disc = g * g - 4.0 * om * om;
    let one = Complex64::new(1.0, 0.0);
    if disc >= 0.0 {
        // Below (or at) the EP: common oscillation frequency, split decay.
        let s = disc.sqrt();
        let e = |sign: f64| [Complex64::new(0.0, (-g + sign * s) / (2.0 * om)), one];
        NhEigensystem {
            lambda_plus: Complex64::new(0.5 * (-g + s), -w0),
            lambda_minus: Complex64::new(0.5 * (-g - s), -w0),
            e_plus: e(1.0),
            e_minus: e(-1.0),
        }
    } else {
        // Above the EP: common decay, split frequencies, |e_1| = |e_2| = 1.
        let r = (-disc).sqrt();
        let e = |sign: f64| {
            let z = Complex64::new(-sign * r, -g) / (2.0 * om);
            [z / z.norm(), one]
        };
        NhEigensystem {
            lambda_plus: Complex64::new(-0.5 * g, -w0 + 0.5 * r),
            lambda_minus: Complex64::new(-0.5 * g, -w0 - 0.5 * r),
            e_plus: e(1.0),
            e_minus: e(-1.0),
        }
    }
}

/// Head amplitudes of the reduced model.
#[derive(Debug, Clone, PartialEq)]
pub struct NhTrajectory {
    pub times: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
}

/// `exp(M t)` as a 2x2 matrix.
fn propagator(p: &NhParams, t: f64) -> [[Complex64; 2]; 2] {
    if p.near_ep() {
        return jordan_propagator(p, t);
    }
    let es = nh_eigensystem(p);
    let (u, v) = (es.e_plus, es.e_minus);
    // Columns e+ and e-; invert the 2x2 basis matrix.
    let det = u[0] * v[1] - v[0] * u[1];
    let inv = [[v[1] / det, -v[0] / det], [-u[1] / det, u[0] / det]];
    let (xp, xm) = ((es.lambda_plus * t).exp(), (es.lambda_minus * t).exp());
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = u[i] * xp * inv[0][j] + v[i] * xm * inv[1][j];
        }
    }
    out
}

/// `exp(M t) = exp(mu t) (cosh(d t) I + sinh(d t)/d N)` with `M = mu I + N`,
/// `N^2 = d^2 I`. Exact at and near the EP, where `d -> 0`.
fn jordan_propagator(p: &NhParams, t: f64) -> [[Complex64; 2]; 2] {
    let m = p.generator();
    let mu = 0.5 * (m[0][0] + m[1][1]);
    let n = [[m[0][0] - mu, m[0][1]], [m[1][0], m[1][1] - mu]];
    let d = (n[0][0] * n[0][0] + n[0][1] * n[1][0]).sqrt();
    let x = d * t;
    let (ch, sh_over_d) = if x.norm() < 1e-4 {
        let x2 = x * x;
        (1.0 + x2 / 2.0 + x2 * x2 / 24.0, t * (1.0 + x2 / 6.0 + x2 * x2 / 120.0))
    } else {
        (x.cosh(), x.sinh() / d)
    };
    let e = (mu * t).exp();
    [
        [e * (ch + sh_over_d * n[0][0]), e * sh_over_d * n[0][1]],
        [e * sh_over_d * n[1][0], e * (ch + sh_over_d * n[1][1])],
    ]
}

/// Exact solution of the noiseless reduced model.
pub fn nh_propagate(p: &NhParams, init: [Complex64; 2], times: &[f64]) -> NhTrajectory {
    let mut a1 = Vec::with_capacity(times.len());
    let mut a2 = Vec::with_capacity(times.len());
    for &t in times {
        let u = propagator(p, t);
        a1.push(u[0][0] * init[0] + u[0][1] * init[1]);
        a2.push(u[1][0] * init[0] + u[1][1] * init[1]);
    }
    NhTrajectory { times: times.to_vec(), a1, a2 }
}

/// Averaged amplitude ratio of the reduced model started in `e+`, over
/// `[0, t_max_tr T_R]` of the finite system `params`, for each coupling.
pub fn nh_ratio_curve(params: &SystemParams, omegas: &[f64], t_max_tr: f64) -> Result<RatioCurve> {
    if omegas.is_empty() {
        return Err(Error::Empty("omega grid"));
    }
    let t_max = t_max_tr * params.t_return();
    let points = omegas
        .iter()
        .map(|&omega| {
            let p = NhParams::from_system(&params.with_omega(omega));
            let e = nh_eigensystem(&p).e_plus;
            let fmax = omega + p.gamma + p.omega0.abs();
            let steps = ((t_max * 20.0 * fmax / TAU).ceil() as usize).max(1);
            let grid = TimeGrid::new(0.0, t_max, steps)?;
            let tr = nh_propagate(&p, e, &grid.times());
            let m1 = grid.mean(|i| tr.a1[i].norm());
            let m2 = grid.mean(|i| tr.a2[i].norm());
            if !(m2 >= crate::dynamics::DIVISION_GUARD) {
                return Err(Error::DivisionGuard { value: m2, threshold: crate::dynamics::DIVISION_GUARD });
            }
            Ok(RatioPoint { omega, ratio: m1 / m2, dispersion: 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioCurve { points, n_bath: params.n_bath, t_max_tr, ensemble_size: 1, seed: None })
}

/// Coupling at which the spectrum of oscillator 2 splits when each
/// oscillator has its own reservoir (rates `gamma1`, `gamma2`, temperatures
/// `t1`, `t2`). Reduces to `gamma / sqrt(2)` for a single reservoir.
pub fn noisy_split_threshold(gamma1: f64, gamma2: f64, t1: f64, t2: f64) -> Result<f64> {
    let den = 2.0 * (gamma2 * t2 + 2.0 * gamma1 * t1);
    if !(den > 0.0) {
        return Err(Error::Domain(format!("denominator 2(g2 T2 + 2 g1 T1) = {den:e} is not positive")));
    }
    let (g1, g2) = (gamma1, gamma2);
    let lin = g2 * g2 * g1 * t1 + g1.powi(3) * t1 - 2.0 * g1 * g1 * g2 * t2 - 2.0 * g2 * g2 * g1 * t2;
    let sq = g1 * (g1 * g1 + g2 * g2) * t1 - 2.0 * g1 * g2 * (g1 + g2) * t2;
    let disc = 4.0 * g2 * g1.powi(4) * t2 * (g2 * t2 + 2.0 * g1 * t1) + sq * sq;
    if disc < 0.0 {
        return Err(Error::Domain(format!("negative discriminant {disc:e}")));
    }
    let omega_sq = (lin + disc.sqrt()) / den;
    if !(omega_sq > 0.0) {
        return Err(Error::Domain(format!("non-positive squared split coupling {omega_sq:e}")));
    }
    Ok(omega_sq.sqrt())
}

/// White-noise drive on oscillator 1 with `<xi*(t+s) xi(t)> = gamma T delta(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub temperature: f64,
    pub seed: u64,
    pub dt: f64,
    pub n_realizations: usize,
}

impl NoiseSpec {
    fn check(&self, p: &NhParams) -> Result<()> {
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidParams(format!("temperature must be non-negative, got {}", self.temperature)));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParams("need at least one realization".into()));
        }
        let rate = p.gamma.max(p.omega_big.abs());
        if !(self.dt > 0.0) || rate * self.dt > SDE_STEP_LIMIT {
            return Err(Error::StepSize { dt: self.dt, limit: SDE_STEP_LIMIT / rate.max(f64::MIN_POSITIVE) });
        }
        Ok(())
    }
}

/// Largest step [`simulate_noisy`] accepts, shrunk by `safety`.
pub fn default_sde_step(p: &NhParams, safety: f64) -> f64 {
    safety * SDE_STEP_LIMIT / p.gamma.max(p.omega_big.abs()).max(f64::MIN_POSITIVE)
}

/// Euler-Maruyama in the rotating frame for one realization. `sink` sees
/// every step index `0..=steps` with the rotating-frame amplitudes.
fn run_realization<F: FnMut(usize, Complex64, Complex64)>(
    p: &NhParams,
    noise: &NoiseSpec,
    init: [Complex64; 2],
    steps: usize,
    index: usize,
    mut sink: F,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(index as u64);
    let dt = noise.dt;
    let sigma = (p.gamma * noise.temperature * dt / 2.0).sqrt();
    let c = Complex64::new(0.0, -p.omega_big);
    let (mut a1, mut a2) = (init[0], init[1]);
    sink(0, a1, a2);
    for s in 1..=steps {
        let mut n1 = (-p.gamma * a1 + c * a2) * dt;
        if sigma > 0.0 {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            n1 += Complex64::new(sigma * re, sigma * im);
        }
        let n2 = c * a1 * dt;
        a1 += n1;
        a2 += n2;
        sink(s, a1, a2);
    }
}

/// Seeded ensemble of noisy trajectories on `[0, t_max]`, one sample per step.
/// Realization `r` draws from ChaCha8 stream `r` of `noise.seed`.
pub fn simulate_noisy(p: &NhParams, noise: &NoiseSpec, init: [Complex64; 2], t_max: f64, exec: Execution) -> Result<Vec<NhTrajectory>> {
    noise.check(p)?;
    let steps = (t_max / noise.dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|s| s as f64 * noise.dt).collect();
    let carrier: Vec<Complex64> = times.iter().map(|t| (-I * p.omega0 * *t).exp()).collect();
    Ok(par::map_range(exec, noise.n_realizations, |r| {
        let mut a1 = Vec::with_capacity(steps + 1);
        let mut a2 = Vec::with_capacity(steps + 1);
        run_realization(p, noise, init, steps, r, |s, x1, x2| {
            a1.push(x1 * carrier[s]);
            a2.push(x2 * carrier[s]);
        });
        NhTrajectory { times: times.clone(), a1, a2 }
    }))
}

/// Averaged two-sided power spectral densities of both heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Angular frequency, ascending; a mode `exp(-i f t)` peaks at `f`.
    pub freq: Vec<f64>,
    pub psd_a1: Vec<f64>,
    pub psd_a2: Vec<f64>,
    /// Frequency resolution `2 pi / (L ds)`.
    pub resolution: f64,
    pub segments: usize,
}

/// Outcome of the split test on the spectrum of oscillator 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// The carrier is a local minimum of the smoothed spectrum.
    pub split: bool,
    /// Peak frequencies of the smoothed spectrum when split.
    pub peak_freqs: Vec<f64>,
    /// Least-squares coefficients of `1/S = c0 + c1 x^2 + c2 x^4`, with
    /// `x = (f - omega0) / gamma` over `|x| <= 1`.
    pub fit: [f64; 3],
    /// Half-height rule applied to the raw periodogram.
    pub half_height_double: bool,
    pub spectrum: Spectrum,
}

/// Welch estimate of the stationary spectra. Discards the first `10/gamma`,
/// decimates, and uses Hann-windowed power-of-two segments with 50% overlap,
/// long enough for a resolution of `gamma / 10`.
pub fn noisy_spectrum(p: &NhParams, noise: &NoiseSpec, t_max: f64, exec: Execution) -> Result<Spectrum> {
    noise.check(p)?;
    if !(p.gamma > 0.0) {
        return Err(Error::Domain("spectrum estimation needs gamma > 0".into()));
    }
    if !(noise.temperature > 0.0) {
        return Err(Error::Domain("noise-free spectrum estimation refused: temperature is zero".into()));
    }
    let dt = noise.dt;
    let steps = (t_max / dt).round() as usize;
    let burn = (10.0 / p.gamma / dt).ceil() as usize;
    let nyquist_target = 2.0 * (p.omega_big.abs() + 3.0 * p.gamma);
    let dec = ((PI / nyquist_target / dt).floor() as usize).max(1);
    let ds = dt * dec as f64;
    let seg = ((20.0 * PI / p.gamma / ds).ceil() as usize).next_power_of_two();
    let kept = steps.saturating_sub(burn) / dec + usize::from(steps >= burn);
    if kept < seg {
        return Err(Error::InsufficientSamples(format!(
            "{kept} stationary samples after decimation, one segment needs {seg}; increase t_max"
        )));
    }
    let hop = seg / 2;
    let starts: Vec<usize> = (0..=(kept - seg) / hop).map(|i| i * hop).collect();
    let window: Vec<f64> = (0..seg).map(|n| 0.5 - 0.5 * (TAU * n as f64 / (seg - 1) as f64).cos()).collect();
    let wnorm: f64 = window.iter().map(|w| w * w).sum();

    let per_real = par::map_range(exec, noise.n_realizations, |r| {
        let mut x1 = Vec::with_capacity(kept);
        let mut x2 = Vec::with_capacity(kept);
        run_realization(p, noise, [ZERO, ZERO], steps, r, |s, a1, a2| {
            if s >= burn && (s - burn).is_multiple_of(dec) {
                x1.push(a1);
                x2.push(a2);
            }
        });
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(seg);
        let mut acc = [vec![0.0; seg], vec![0.0; seg]];
        let mut buf = vec![ZERO; seg];
        for (x, out) in [&x1, &x2].into_iter().zip(acc.iter_mut()) {
            for &s0 in &starts {
                for n in 0..seg {
                    buf[n] = x[s0 + n] * window[n];
                }
                fft.process(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o += b.norm_sqr();
                }
            }
        }
        acc
    });

    let count = (noise.n_realizations * starts.len()) as f64;
    let scale = ds / (wnorm * count);
    let mut sum = [vec![0.0; seg], vec![0.0; seg]];
    for acc in &per_real {
        for (s, a) in sum.iter_mut().zip(acc) {
            for (x, y) in s.iter_mut().zip(a) {
                *x += y;
            }
        }
    }
    // Reorder from FFT bins to ascending frequency.
    let resolution = TAU / (seg as f64 * ds);
    let half = seg / 2;
    let order: Vec<usize> = (half..seg).chain(0..half).collect();
    let freq = order.iter().map(|&k| p.omega0 + resolution * (k as f64 - if k >= half { seg as f64 } else { 0.0 })).collect();
    let pick = |v: &Vec<f64>| order.iter().map(|&k| v[k] * scale).collect();
    Ok(Spectrum { freq, psd_a1: pick(&sum[0]), psd_a2: pick(&sum[1]), resolution, segments: starts.len() })
}

/// Split test on the noisy spectrum of oscillator 2: fits
/// `1/S(x) = c0 + c1 x^2 + c2 x^4` around the carrier and calls the spectrum
/// split when the carrier is a local minimum (`c1 < 0`).
pub fn spectrum_split_detect(p: &NhParams, noise: &NoiseSpec, t_max: f64, exec: Execution) -> Result<SplitReport> {
    let spectrum = noisy_spectrum(p, noise, t_max, exec)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (f, s) in spectrum.freq.iter().zip(&spectrum.psd_a2) {
        let x = (f - p.omega0) / p.gamma;
        if x.abs() <= 1.0 && *s > 0.0 {
            xs.push(x);
            ys.push(1.0 / s);
        }
    }
    if xs.len() < 6 {
        return Err(Error::InsufficientSamples(format!("only {} spectral bins within gamma of the carrier", xs.len())));
    }
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| xs[i].powi(2 * j as i32));
    let svd = a.svd(true, true);
    let c = svd
        .solve(&DVector::from_vec(ys), 1e-12)
        .map_err(|e| Error::NoConvergence(format!("least-squares fit failed: {e}")))?;
    let fit = [c[0], c[1], c[2]];
    let split = fit[1] < 0.0;
    let peak_freqs = if split && fit[2] > 0.0 {
        let x = (-fit[1] / (2.0 * fit[2])).sqrt() * p.gamma;
        vec![p.omega0 - x, p.omega0 + x]
    } else {
        Vec::new()
    };
    let profile = crate::spectral::ComponentProfile {
        component: crate::spectral::Head::Two,
        points: spectrum.freq.iter().zip(&spectrum.psd_a2).map(|(f, s)| (*f, s.sqrt())).collect(),
        center: p.omega0,
        spacing: spectrum.resolution,
    };
    let half_height_double = crate::spectral::peak_features(&profile)?.half_height_double;
    Ok(SplitReport { split, peak_freqs, fit, half_height_double, spectrum })
}

/// Analytic maximum of the noisy spectrum of oscillator 2 above the split:
/// `sqrt(Omega^2 - gamma^2 / 2)` from the carrier (zero below).
pub fn spectrum_peak_offset(p: &NhParams) -> f64 {
    (p.omega_big * p.omega_big - 0.5 * p.gamma * p.gamma).max(0.0).sqrt()
}

/// Bisects the split flag of [`spectrum_split_detect`] over `Omega` in
/// `[lo, hi]` down to width `tol`. The same seeds are used at every point.
pub fn noisy_split_bisect(p: &NhParams, noise: &NoiseSpec, t_max: f64, lo: f64, hi: f64, tol: f64, exec: Execution) -> Result<f64> {
    bisect_transition(lo, hi, tol, |omega| {
        let q = p.with_omega(omega);
        let spec = NoiseSpec { dt: noise.dt.min(default_sde_step(&q, 1.0)), ..*noise };
        Ok(spectrum_split_detect(&q, &spec, t_max, exec)?.split)
    })
}
