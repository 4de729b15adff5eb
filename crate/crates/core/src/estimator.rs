//! Mode-sum view of the averaged amplitude ratio.
//!
//! For a bath-free start, `|a_j(t)|` is built from three sums over the
//! eigenbasis: the diagonal sums `S_jj(t) = sum_k (e_k)_j^2 exp(-i d_k t)`
//! and the cross sum `xi(t) = sum_k (e_k)_1 (e_k)_2 exp(-i d_k t)`, with
//! `d_k = f_k - omega0`. The estimators below drop progressively more of
//! that structure, down to a static ratio and a two-number peak estimate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ensemble_ratio_in, mode_series, EnsembleSpec, HeadKernel, TimeGrid, DIVISION_GUARD};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::par::{self, Execution};
use crate::spectral::{build_matrix, component_profile, diagonalize, peak_features, EigenBasis, Head, PeakFeatures};

/// `|S_jj(t)|` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSumSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub basis_id: u64,
}

impl ModeSumSeries {
    pub fn mean(&self) -> f64 {
        self.grid.mean(|i| self.values[i])
    }
}

fn weights(basis: &EigenBasis, a: Head, b: Head) -> Vec<Complex64> {
    basis.head_row(a).iter().zip(basis.head_row(b)).map(|(x, y)| Complex64::new(x * y, 0.0)).collect()
}

pub fn mode_sum(basis: &EigenBasis, j: Head, grid: &TimeGrid, exec: Execution) -> ModeSumSeries {
    let s = mode_series(basis.detunings(), &[weights(basis, j, j)], grid, exec);
    ModeSumSeries { grid: *grid, values: s[0].iter().map(|z| z.norm()).collect(), basis_id: basis.id() }
}

/// `xi(t)` on a grid.
pub fn cross_sum(basis: &EigenBasis, grid: &TimeGrid, exec: Execution) -> Vec<Complex64> {
    mode_series(basis.detunings(), &[weights(basis, Head::One, Head::Two)], grid, exec).remove(0)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if !(den.abs() >= DIVISION_GUARD) {
        return Err(Error::DivisionGuard { value: den, threshold: DIVISION_GUARD });
    }
    Ok(num / den)
}

/// Ratio of `<sqrt(|S_11|^2 + |xi|^2)>_t` to `<sqrt(|S_22|^2 + |xi|^2)>_t`:
/// the averaged amplitude ratio with the sign-alternating interference terms
/// dropped and equal initial moduli.
pub fn ratio_no_cross_terms(basis: &EigenBasis, t_max: f64) -> Result<f64> {
    let k = HeadKernel::new(basis, TimeGrid::for_params(basis.params(), t_max)?, Execution::default());
    no_cross_from_kernel(&k)
}

/// As [`ratio_no_cross_terms`] but also without `|xi|^2`.
pub fn ratio_no_cross_no_xi(basis: &EigenBasis, t_max: f64) -> Result<f64> {
    let k = HeadKernel::new(basis, TimeGrid::for_params(basis.params(), t_max)?, Execution::default());
    no_xi_from_kernel(&k)
}

pub fn no_cross_from_kernel(k: &HeadKernel) -> Result<f64> {
    let num = k.grid.mean(|i| (k.s11[i].norm_sqr() + k.s12[i].norm_sqr()).sqrt());
    let den = k.grid.mean(|i| (k.s22[i].norm_sqr() + k.s12[i].norm_sqr()).sqrt());
    ratio(num, den)
}

pub fn no_xi_from_kernel(k: &HeadKernel) -> Result<f64> {
    ratio(k.grid.mean(|i| k.s11[i].norm()), k.grid.mean(|i| k.s22[i].norm()))
}

/// `sqrt(sum_k (e_k)_1^4) / sqrt(sum_k (e_k)_2^4)`: the time-independent
/// part of the mode sums alone.
pub fn static_sum_ratio(basis: &EigenBasis) -> Result<f64> {
    let q = |j| basis.head_row(j).iter().map(|x| x.powi(4)).sum::<f64>().sqrt();
    ratio(q(Head::One), q(Head::Two))
}

/// `(s1 sqrt(G1) P1) / (s2 sqrt(G2) P2)` with `s_j = sqrt 2` when component
/// `j` is double-peaked by the half-height rule.
pub fn peak_estimate_ratio(f1: &PeakFeatures, f2: &PeakFeatures) -> Result<f64> {
    let term = |f: &PeakFeatures| -> Result<f64> {
        if !(f.total_width > 0.0 && f.max_height > 0.0) {
            return Err(Error::DegenerateProfile(f.max_height.min(f.total_width)));
        }
        let s = if f.half_height_double { std::f64::consts::SQRT_2 } else { 1.0 };
        Ok(s * f.total_width.sqrt() * f.max_height)
    };
    ratio(term(f1)?, term(f2)?)
}

/// Time average of `|S_jj|` over `[start, end]`.
pub fn mode_sum_mean(basis: &EigenBasis, j: Head, start: f64, end: f64, exec: Execution) -> Result<f64> {
    let grid = TimeGrid::for_interval(basis.params(), start, end)?;
    Ok(mode_sum(basis, j, &grid, exec).mean())
}

/// Relative mismatch of the half-band mirror relation
/// `L(t) = s conj(R(t))`, where `L` sums `(e_k)_j^2 exp(i (d_k + D) t)` over
/// `d_k < 0`, `R` sums `(e_k)_j^2 exp(i (d_k - D) t)` over `d_k > 0`, and `D`
/// is the upper peak offset. Reported for both signs `s = +1` and `s = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorCheck {
    pub plus: f64,
    pub minus: f64,
}

pub fn half_band_mirror(basis: &EigenBasis, j: Head, t: f64) -> Result<MirrorCheck> {
    let row = basis.head_row(j);
    let d = basis.detunings();
    let upper = (0..d.len())
        .filter(|&k| d[k] > 0.0)
        .max_by(|&a, &b| (row[a] * row[a]).total_cmp(&(row[b] * row[b])))
        .ok_or(Error::Empty("upper half band"))?;
    let off = d[upper];
    let mut l = Complex64::new(0.0, 0.0);
    let mut r = Complex64::new(0.0, 0.0);
    for k in 0..d.len() {
        let w = row[k] * row[k];
        if d[k] < 0.0 {
            l += w * Complex64::from_polar(1.0, (d[k] + off) * t);
        } else if d[k] > 0.0 {
            r += w * Complex64::from_polar(1.0, (d[k] - off) * t);
        }
    }
    let scale = l.norm().max(DIVISION_GUARD);
    Ok(MirrorCheck { plus: (l - r.conj()).norm() / scale, minus: (l + r.conj()).norm() / scale })
}

/// All estimator columns at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub omega: f64,
    pub ratio_full: f64,
    pub dispersion_full: f64,
    pub ratio_no_cross: f64,
    pub ratio_no_xi: f64,
    pub ratio_static: f64,
    pub ratio_peak: f64,
    pub features1: PeakFeatures,
    pub features2: PeakFeatures,
}

impl EstimatorRow {
    /// `P1 / P2`.
    pub fn height_ratio(&self) -> f64 {
        self.features1.max_height / self.features2.max_height
    }

    /// `G1 / G2`.
    pub fn width_ratio(&self) -> f64 {
        self.features1.total_width / self.features2.total_width
    }
}

/// Evaluates the full ensemble ratio and every estimator over `omegas`,
/// averaging on `[0, t_max_tr T_R]`.
pub fn estimator_sweep(
    params: &SystemParams,
    omegas: &[f64],
    t_max_tr: f64,
    spec: &EnsembleSpec,
    exec: Execution,
) -> Result<Vec<EstimatorRow>> {
    if omegas.is_empty() {
        return Err(Error::Empty("omega grid"));
    }
    if !(t_max_tr > 0.0) {
        return Err(Error::InvalidParams(format!("t_max must be positive, got {t_max_tr} T_R")));
    }
    let t_max = t_max_tr * params.t_return();
    par::try_map_indexed(exec, omegas, |_, &omega| {
        let p = params.with_omega(omega);
        let basis = diagonalize(&build_matrix(&p)?)?;
        let kernel = HeadKernel::new(&basis, TimeGrid::for_params(&p, t_max)?, Execution::Sequential);
        let (ratio_full, dispersion_full) = ensemble_ratio_in(&kernel, &spec.states(&p), Execution::Sequential)?;
        let features1 = peak_features(&component_profile(&basis, Head::One))?;
        let features2 = peak_features(&component_profile(&basis, Head::Two))?;
        Ok(EstimatorRow {
            omega,
            ratio_full,
            dispersion_full,
            ratio_no_cross: no_cross_from_kernel(&kernel)?,
            ratio_no_xi: no_xi_from_kernel(&kernel)?,
            ratio_static: static_sum_ratio(&basis)?,
            ratio_peak: peak_estimate_ratio(&features1, &features2)?,
            features1,
            features2,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(p: f64, w: f64, double: bool) -> PeakFeatures {
        PeakFeatures {
            peak_count: if double { 2 } else { 1 },
            heights: vec![p],
            max_height: p,
            total_width: w,
            offsets: vec![0.0],
            dip: p,
            half_height_double: double,
        }
    }

    #[test]
    fn identical_features_give_one() {
        let f = features(0.1, 0.02, true);
        assert_eq!(peak_estimate_ratio(&f, &f).unwrap(), 1.0);
    }

    #[test]
    fn sqrt2_switch() {
        let r = peak_estimate_ratio(&features(0.1, 0.02, true), &features(0.1, 0.02, false)).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(peak_estimate_ratio(&features(0.1, 0.0, true), &features(0.1, 0.02, false)).is_err());
    }
}
