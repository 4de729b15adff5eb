//! Exact propagation in the eigenbasis, an RK4 oracle, time averages and
//! amplitude-ratio sweeps.
//!
//! Everything runs in the frame rotating at `omega0`; the carrier phase
//! `exp(-i omega0 t)` is applied last and never enters a modulus.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialState, SystemParams};
use crate::par::{self, Execution};
use crate::reduction::{nh_eigensystem, NhParams};
use crate::spectral::{build_matrix, diagonalize, EigenBasis, Head};

/// Denominator floor for amplitude ratios.
pub const DIVISION_GUARD: f64 = 1e-14;
/// Below this modulus a phase is reported as undefined.
pub const PHASE_FLOOR: f64 = 1e-14;

/// Samples per chunk of the phasor recurrence. Each chunk starts from exact
/// phases, so the result does not depend on how chunks are scheduled.
const CHUNK: usize = 4096;
/// Recurrence steps between exact re-synchronisations.
const RESYNC: usize = 256;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Expansion of an initial state in an eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub coeffs: Vec<Complex64>,
    pub basis_id: u64,
}

impl ModeCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Uniform sampling `start + i (end - start) / steps`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end >= start) {
            return Err(Error::InvalidParams(format!("bad time interval [{start}, {end}]")));
        }
        if steps == 0 && end > start {
            return Err(Error::InvalidParams("a non-empty interval needs at least one step".into()));
        }
        Ok(Self { start, end, steps })
    }

    /// Default sampling for `[0, t_max]`: at least 20 samples per period of
    /// the fastest rotating-frame frequency `N dw / 2 + Omega + gamma`.
    pub fn for_params(params: &SystemParams, t_max: f64) -> Result<Self> {
        Self::for_interval(params, 0.0, t_max)
    }

    pub fn for_interval(params: &SystemParams, start: f64, end: f64) -> Result<Self> {
        let fmax = params.band_width() / 2.0 + params.omega_big + params.gamma();
        let dt = TAU / (20.0 * fmax);
        let steps = ((end - start) / dt).ceil().max(0.0) as usize;
        Self::new(start, end, steps.max(usize::from(end > start)))
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            (self.end - self.start) / self.steps as f64
        }
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.end
        } else {
            self.start + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Trapezoid-rule mean of `f(i)` over the grid.
    pub fn mean<F: FnMut(usize) -> f64>(&self, mut f: F) -> f64 {
        if self.steps == 0 {
            return f(0);
        }
        let mut s = 0.5 * (f(0) + f(self.steps));
        for i in 1..self.steps {
            s += f(i);
        }
        s / self.steps as f64
    }
}

/// Sampled head amplitudes, optionally with the bath and the total norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
    /// Bath amplitudes per sample, when recorded.
    pub bath: Option<Vec<Vec<Complex64>>>,
    /// Total squared norm per sample, when recorded.
    pub norm_sq: Option<Vec<f64>>,
    pub params: SystemParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn project_initial(basis: &EigenBasis, init: &InitialState) -> Result<ModeCoefficients> {
    init.check(basis.params())?;
    let n = basis.len();
    let bath_free = init.is_bath_empty();
    let coeffs = (0..n)
        .map(|k| {
            let e = basis.vector(k);
            let mut c = init.a1 * e[0] + init.a2 * e[1];
            if !bath_free {
                for (b, x) in init.bath.iter().zip(&e[2..]) {
                    c += b * x;
                }
            }
            c
        })
        .collect();
    Ok(ModeCoefficients { coeffs, basis_id: basis.id() })
}

fn check_coeffs(basis: &EigenBasis, c: &ModeCoefficients) -> Result<()> {
    if c.coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), actual: c.coeffs.len() });
    }
    if c.basis_id != basis.id() {
        return Err(Error::InvalidParams("mode coefficients were projected on a different basis".into()));
    }
    Ok(())
}

fn carrier(omega0: f64, t: f64) -> Complex64 {
    let (s, c) = (omega0 * t).sin_cos();
    Complex64::new(c, -s)
}

fn rotor(delta: f64, t: f64) -> Complex64 {
    let (s, c) = (delta * t).sin_cos();
    Complex64::new(c, -s)
}

/// Head amplitudes `a_j(t) = sum_k C_k (e_k)_j exp(-i f_k t)` at arbitrary times.
pub fn propagate(basis: &EigenBasis, c: &ModeCoefficients, times: &[f64]) -> Result<Trajectory> {
    check_coeffs(basis, c)?;
    let w1: Vec<Complex64> = c.coeffs.iter().zip(basis.head_row(Head::One)).map(|(c, e)| c * e).collect();
    let w2: Vec<Complex64> = c.coeffs.iter().zip(basis.head_row(Head::Two)).map(|(c, e)| c * e).collect();
    let w0 = basis.params().omega0;
    let mut a1 = Vec::with_capacity(times.len());
    let mut a2 = Vec::with_capacity(times.len());
    for &t in times {
        let (mut s1, mut s2) = (ZERO, ZERO);
        for (k, d) in basis.detunings().iter().enumerate() {
            let z = rotor(*d, t);
            s1 += w1[k] * z;
            s2 += w2[k] * z;
        }
        let ph = carrier(w0, t);
        a1.push(s1 * ph);
        a2.push(s2 * ph);
    }
    Ok(Trajectory { times: times.to_vec(), a1, a2, bath: None, norm_sq: None, params: *basis.params() })
}

/// Full state vector at time `t`. O(n^2).
pub fn state_at(basis: &EigenBasis, c: &ModeCoefficients, t: f64) -> Result<Vec<Complex64>> {
    check_coeffs(basis, c)?;
    let n = basis.len();
    let ph = carrier(basis.params().omega0, t);
    let mut x = vec![ZERO; n];
    for (k, d) in basis.detunings().iter().enumerate() {
        let ck = c.coeffs[k] * rotor(*d, t) * ph;
        for (xi, e) in x.iter_mut().zip(basis.vector(k)) {
            *xi += ck * e;
        }
    }
    Ok(x)
}

/// Like [`propagate`] but also records the bath and the total norm.
pub fn propagate_full(basis: &EigenBasis, c: &ModeCoefficients, times: &[f64]) -> Result<Trajectory> {
    let states = times.iter().map(|&t| state_at(basis, c, t)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: times.to_vec(),
        a1: states.iter().map(|s| s[0]).collect(),
        a2: states.iter().map(|s| s[1]).collect(),
        norm_sq: Some(states.iter().map(|s| s.iter().map(|x| x.norm_sqr()).sum()).collect()),
        bath: Some(states.into_iter().map(|s| s[2..].to_vec()).collect()),
        params: *basis.params(),
    })
}

/// `sum_k w_mk exp(-i d_k t)` on a uniform grid for several weight vectors
/// at once, via a phasor recurrence re-synchronised every few hundred steps.
pub fn mode_series(detunings: &[f64], weights: &[Vec<Complex64>], grid: &TimeGrid, exec: Execution) -> Vec<Vec<Complex64>> {
    let n = grid.len();
    let chunks = n.div_ceil(CHUNK);
    let dt = grid.dt();
    let step: Vec<Complex64> = detunings.iter().map(|d| rotor(*d, dt)).collect();
    let parts = par::map_range(exec, chunks, |c| {
        let (i0, i1) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
        let mut out = vec![Vec::with_capacity(i1 - i0); weights.len()];
        let mut z = Vec::new();
        for i in i0..i1 {
            if (i - i0) % RESYNC == 0 {
                let t = grid.time(i);
                z = detunings.iter().map(|d| rotor(*d, t)).collect();
            }
            for (w, o) in weights.iter().zip(out.iter_mut()) {
                let mut s = ZERO;
                for (wk, zk) in w.iter().zip(&z) {
                    s += wk * zk;
                }
                o.push(s);
            }
            for (zk, pk) in z.iter_mut().zip(&step) {
                *zk *= pk;
            }
        }
        out
    });
    let mut series = vec![Vec::with_capacity(n); weights.len()];
    for part in parts {
        for (s, p) in series.iter_mut().zip(part) {
            s.extend(p);
        }
    }
    series
}

/// Head amplitudes on a uniform grid using the fast recurrence.
pub fn propagate_grid(basis: &EigenBasis, c: &ModeCoefficients, grid: &TimeGrid, exec: Execution) -> Result<Trajectory> {
    check_coeffs(basis, c)?;
    let w: Vec<Vec<Complex64>> = [Head::One, Head::Two]
        .iter()
        .map(|&j| c.coeffs.iter().zip(basis.head_row(j)).map(|(c, e)| c * e).collect())
        .collect();
    let mut s = mode_series(basis.detunings(), &w, grid, exec);
    let w0 = basis.params().omega0;
    let times = grid.times();
    if w0 != 0.0 {
        for series in s.iter_mut() {
            for (x, &t) in series.iter_mut().zip(&times) {
                *x *= carrier(w0, t);
            }
        }
    }
    let a2 = s.pop().unwrap_or_default();
    let a1 = s.pop().unwrap_or_default();
    Ok(Trajectory { times, a1, a2, bath: None, norm_sq: None, params: *basis.params() })
}

/// Response of both heads to bath-free initial states on a fixed grid:
/// `S_ij(t) = sum_k (e_k)_i (e_k)_j exp(-i (f_k - omega0) t)`, so that
/// `a1 = a1' S11 + a2' S12` and `a2 = a1' S12 + a2' S22` up to the carrier
/// phase. Built once per basis, then any number of initial states is cheap.
#[derive(Debug, Clone)]
pub struct HeadKernel {
    pub grid: TimeGrid,
    pub s11: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s22: Vec<Complex64>,
}

impl HeadKernel {
    pub fn new(basis: &EigenBasis, grid: TimeGrid, exec: Execution) -> Self {
        let e1 = basis.head_row(Head::One);
        let e2 = basis.head_row(Head::Two);
        let w = vec![
            e1.iter().map(|x| Complex64::new(x * x, 0.0)).collect(),
            e1.iter().zip(e2).map(|(x, y)| Complex64::new(x * y, 0.0)).collect(),
            e2.iter().map(|x| Complex64::new(x * x, 0.0)).collect(),
        ];
        let mut s = mode_series(basis.detunings(), &w, &grid, exec).into_iter();
        let (s11, s12, s22) = (s.next().unwrap(), s.next().unwrap(), s.next().unwrap());
        Self { grid, s11, s12, s22 }
    }

    /// Rotating-frame head amplitudes at sample `i`.
    pub fn heads_at(&self, i: usize, a1: Complex64, a2: Complex64) -> (Complex64, Complex64) {
        (a1 * self.s11[i] + a2 * self.s12[i], a1 * self.s12[i] + a2 * self.s22[i])
    }

    /// Trapezoid time averages of `|a1|` and `|a2|`.
    pub fn mean_abs(&self, a1: Complex64, a2: Complex64) -> (f64, f64) {
        let m1 = self.grid.mean(|i| self.heads_at(i, a1, a2).0.norm());
        let m2 = self.grid.mean(|i| self.heads_at(i, a1, a2).1.norm());
        (m1, m2)
    }

    pub fn ratio(&self, a1: Complex64, a2: Complex64) -> Result<f64> {
        let (m1, m2) = self.mean_abs(a1, a2);
        guarded_ratio(m1, m2)
    }
}

fn guarded_ratio(num: f64, den: f64) -> Result<f64> {
    if !(den.abs() >= DIVISION_GUARD) {
        return Err(Error::DivisionGuard { value: den, threshold: DIVISION_GUARD });
    }
    Ok(num / den)
}

/// Trapezoid time averages of `|a1|` and `|a2|`.
pub fn time_average_abs(traj: &Trajectory) -> Result<(f64, f64)> {
    let t = &traj.times;
    if t.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    if t.len() == 1 {
        return Ok((traj.a1[0].norm(), traj.a2[0].norm()));
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(Error::InvalidParams("trajectory times must increase".into()));
    }
    let avg = |a: &[Complex64]| {
        let mut s = 0.0;
        for i in 1..t.len() {
            s += 0.5 * (a[i - 1].norm() + a[i].norm()) * (t[i] - t[i - 1]);
        }
        s / span
    };
    Ok((avg(&traj.a1), avg(&traj.a2)))
}

/// `<|a1|>_t / <|a2|>_t` over `[0, t_max]` from exact propagation.
pub fn amplitude_ratio(params: &SystemParams, init: &InitialState, t_max: f64) -> Result<f64> {
    let basis = diagonalize(&build_matrix(params)?)?;
    let grid = TimeGrid::for_params(params, t_max)?;
    amplitude_ratio_in(&basis, init, &grid, Execution::default())
}

pub fn amplitude_ratio_in(basis: &EigenBasis, init: &InitialState, grid: &TimeGrid, exec: Execution) -> Result<f64> {
    if init.is_bath_empty() {
        init.check(basis.params())?;
        return HeadKernel::new(basis, *grid, exec).ratio(init.a1, init.a2);
    }
    let c = project_initial(basis, init)?;
    let (m1, m2) = time_average_abs(&propagate_grid(basis, &c, grid, exec)?)?;
    guarded_ratio(m1, m2)
}

/// `n` pairs of unit-modulus initial amplitudes `exp(i theta)` with theta
/// uniform on `[0, 2 pi)`, drawn in order from a ChaCha8 stream.
pub fn random_phase_states(n: usize, seed: u64) -> Vec<(Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t1: f64 = rng.random_range(0.0..TAU);
            let t2: f64 = rng.random_range(0.0..TAU);
            (Complex64::from_polar(1.0, t1), Complex64::from_polar(1.0, t2))
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_and_dispersion(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Ensemble mean and dispersion of the amplitude ratio over random-phase
/// initial states.
pub fn ensemble_ratio(params: &SystemParams, n_states: usize, t_max: f64, seed: u64) -> Result<(f64, f64)> {
    let basis = diagonalize(&build_matrix(params)?)?;
    let kernel = HeadKernel::new(&basis, TimeGrid::for_params(params, t_max)?, Execution::default());
    ensemble_ratio_in(&kernel, &random_phase_states(n_states, seed), Execution::default())
}

pub fn ensemble_ratio_in(kernel: &HeadKernel, states: &[(Complex64, Complex64)], exec: Execution) -> Result<(f64, f64)> {
    if states.is_empty() {
        return Err(Error::InvalidParams("ensemble needs at least one state".into()));
    }
    let ratios = par::try_map_indexed(exec, states, |_, &(a1, a2)| kernel.ratio(a1, a2))?;
    mean_and_dispersion(&ratios)
}

/// `arg a1 - arg a2` in `(-pi, pi]`; `None` where either modulus is below
/// [`PHASE_FLOOR`].
pub fn phase_difference(traj: &Trajectory) -> Vec<Option<f64>> {
    traj.a1
        .iter()
        .zip(&traj.a2)
        .map(|(a1, a2)| {
            if a1.norm() < PHASE_FLOOR || a2.norm() < PHASE_FLOOR {
                return None;
            }
            let d = (a1 * a2.conj()).arg();
            Some(if d <= -std::f64::consts::PI { std::f64::consts::PI } else { d })
        })
        .collect()
}

/// Classical RK4 options for [`integrate_ode_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdeOptions {
    /// Record every `stride`-th step.
    pub stride: usize,
    pub record_bath: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { stride: 1, record_bath: false }
    }
}

/// Upper bound on `|f|` used by the RK4 step check.
pub fn max_frequency_bound(params: &SystemParams) -> f64 {
    params.omega0.abs() + params.band_width() / 2.0 + params.omega_big + params.g * (params.n_bath as f64).sqrt()
}

pub fn integrate_ode(params: &SystemParams, init: &InitialState, t_max: f64, dt: f64) -> Result<Trajectory> {
    integrate_ode_with(params, init, t_max, dt, OdeOptions::default())
}

/// RK4 on the full system `da/dt = -i H a` in the lab frame. The step is
/// shrunk to divide `t_max` evenly; it must satisfy `dt <= 0.1 / max|f|`.
pub fn integrate_ode_with(
    params: &SystemParams,
    init: &InitialState,
    t_max: f64,
    dt: f64,
    opts: OdeOptions,
) -> Result<Trajectory> {
    init.check(params)?;
    let h = build_matrix(params)?;
    let limit = 0.1 / max_frequency_bound(params);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepSize { dt, limit });
    }
    if !(t_max >= 0.0) {
        return Err(Error::InvalidParams(format!("t_max must be non-negative, got {t_max}")));
    }
    let stride = opts.stride.max(1);
    let steps = (t_max / dt).ceil() as usize;
    let h_step = if steps == 0 { 0.0 } else { t_max / steps as f64 };
    let n = h.dim();

    let mut x = init.to_vector();
    let mut k = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let mut tmp = vec![ZERO; n];
    let minus_i = Complex64::new(0.0, -1.0);
    let deriv = |x: &[Complex64], out: &mut [Complex64]| {
        h.apply_complex(x, out, 0.0);
        out.iter_mut().for_each(|v| *v *= minus_i);
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        a1: Vec::new(),
        a2: Vec::new(),
        bath: opts.record_bath.then(Vec::new),
        norm_sq: Some(Vec::new()),
        params: *params,
    };
    let record = |traj: &mut Trajectory, t: f64, x: &[Complex64]| {
        traj.times.push(t);
        traj.a1.push(x[0]);
        traj.a2.push(x[1]);
        if let Some(b) = traj.bath.as_mut() {
            b.push(x[2..].to_vec());
        }
        if let Some(ns) = traj.norm_sq.as_mut() {
            ns.push(x.iter().map(|v| v.norm_sqr()).sum());
        }
    };
    record(&mut traj, 0.0, &x);

    for s in 0..steps {
        deriv(&x, &mut k[0]);
        for i in 0..n {
            tmp[i] = x[i] + k[0][i] * (0.5 * h_step);
        }
        deriv(&tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = x[i] + k[1][i] * (0.5 * h_step);
        }
        deriv(&tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = x[i] + k[2][i] * h_step;
        }
        deriv(&tmp, &mut k[3]);
        for i in 0..n {
            x[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (h_step / 6.0);
        }
        if (s + 1) % stride == 0 || s + 1 == steps {
            let t = if s + 1 == steps { t_max } else { (s + 1) as f64 * h_step };
            record(&mut traj, t, &x);
        }
    }
    Ok(traj)
}

/// How the initial head amplitudes of a sweep are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EnsembleSpec {
    /// Seeded random phases, the same draws at every sweep point.
    Random { n_states: usize, seed: u64 },
    /// `a1 = a2 = 1`.
    Unit,
    /// Head components of the slow non-Hermitian eigenmode at each Omega.
    EigenPlus,
    /// A fixed pair.
    Fixed { a1: (f64, f64), a2: (f64, f64) },
}

impl EnsembleSpec {
    pub fn size(&self) -> usize {
        match self {
            EnsembleSpec::Random { n_states, .. } => *n_states,
            _ => 1,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            EnsembleSpec::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Initial head states for a sweep point with coupling `params`.
    pub fn states(&self, params: &SystemParams) -> Vec<(Complex64, Complex64)> {
        let c = |p: (f64, f64)| Complex64::new(p.0, p.1);
        match *self {
            EnsembleSpec::Random { n_states, seed } => random_phase_states(n_states, seed),
            EnsembleSpec::Unit => vec![(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))],
            EnsembleSpec::EigenPlus => {
                let e = nh_eigensystem(&NhParams::from_system(params)).e_plus;
                vec![(e[0], e[1])]
            }
            EnsembleSpec::Fixed { a1, a2 } => vec![(c(a1), c(a2))],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub omega: f64,
    pub ratio: f64,
    pub dispersion: f64,
}

/// A swept amplitude-ratio curve with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub points: Vec<RatioPoint>,
    pub n_bath: usize,
    /// Averaging horizon in units of the return time.
    pub t_max_tr: f64,
    pub ensemble_size: usize,
    pub seed: Option<u64>,
}

impl RatioCurve {
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.omega, p.ratio)).collect()
    }
}

/// One amplitude-ratio point per coupling in `omega_grid`, averaged over
/// `[0, t_max_tr T_R]` and over the initial states of `spec`.
pub fn ratio_sweep(
    params: &SystemParams,
    omega_grid: &[f64],
    t_max_tr: f64,
    spec: &EnsembleSpec,
    exec: Execution,
) -> Result<RatioCurve> {
    if omega_grid.is_empty() {
        return Err(Error::Empty("omega grid"));
    }
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("omega grid must be strictly ascending".into()));
    }
    if !(t_max_tr > 0.0) {
        return Err(Error::InvalidParams(format!("t_max must be positive, got {t_max_tr} T_R")));
    }
    if spec.size() == 0 {
        return Err(Error::InvalidParams("ensemble needs at least one state".into()));
    }
    let t_max = t_max_tr * params.t_return();
    let points = par::try_map_indexed(exec, omega_grid, |_, &omega| {
        let p = params.with_omega(omega);
        let basis = diagonalize(&build_matrix(&p)?)?;
        let kernel = HeadKernel::new(&basis, TimeGrid::for_params(&p, t_max)?, Execution::Sequential);
        let (ratio, dispersion) = ensemble_ratio_in(&kernel, &spec.states(&p), Execution::Sequential)?;
        Ok::<_, Error>(RatioPoint { omega, ratio, dispersion })
    })?;
    Ok(RatioCurve { points, n_bath: params.n_bath, t_max_tr, ensemble_size: spec.size(), seed: spec.seed() })
}
