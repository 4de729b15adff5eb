//! Peak descriptors of a squared head-component profile.

use serde::{Deserialize, Serialize};

use super::{build_matrix, component_profile, diagonalize_with, ComponentProfile, Eigensolver, Head};
use crate::curve::bisect_transition;
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Values below this everywhere make a profile degenerate.
pub const DEGENERATE_FLOOR: f64 = 1e-14;

/// Relative depth a dip must have before it counts as separating two peaks.
const DIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFeatures {
    /// Number of distinct maxima, 1 or 2. Two as soon as the profile dips
    /// between a maximum below the carrier and one above it.
    pub peak_count: usize,
    /// Squared-profile maximum of each detected peak, low frequency first.
    pub heights: Vec<f64>,
    /// Global maximum `P` of the squared profile.
    pub max_height: f64,
    /// Total measure of `{f : w(f) >= P/2}` under linear interpolation: the
    /// FWHM of a single peak, or the summed FWHMs of a split one.
    pub total_width: f64,
    /// `|f_peak - omega0|` for each detected peak.
    pub offsets: Vec<f64>,
    /// Squared-profile minimum between the two peaks (equal to `P` when single).
    pub dip: f64,
    /// Half-height rule: two peaks and the minimum between them falls below
    /// half of the global maximum.
    pub half_height_double: bool,
}

pub fn peak_features(profile: &ComponentProfile) -> Result<PeakFeatures> {
    let pts = &profile.points;
    if pts.is_empty() {
        return Err(Error::Empty("profile"));
    }
    let w: Vec<f64> = pts.iter().map(|p| p.1 * p.1).collect();
    let (imax, pmax) = w.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
    if pmax < DEGENERATE_FLOOR {
        return Err(Error::DegenerateProfile(DEGENERATE_FLOOR));
    }
    let c = profile.center;

    // Strongest sample on either side of the carrier.
    let argmax_in = |range: std::ops::Range<usize>| {
        range.fold(None, |best: Option<usize>, i| match best {
            Some(b) if w[b] >= w[i] => Some(b),
            _ => Some(i),
        })
    };
    let split_at = pts.partition_point(|p| p.0 < c);
    let upper_start = pts.partition_point(|p| p.0 <= c);
    let left = argmax_in(0..split_at);
    let right = argmax_in(upper_start..pts.len());

    let mut peaks = vec![imax];
    let mut dip = pmax;
    if let (Some(l), Some(r)) = (left, right) {
        let lowest = (l..=r).map(|i| w[i]).fold(f64::INFINITY, f64::min);
        if lowest < w[l].min(w[r]) * (1.0 - DIP_TOL) {
            peaks = vec![l, r];
            dip = lowest;
        }
    }

    Ok(PeakFeatures {
        peak_count: peaks.len(),
        heights: peaks.iter().map(|&i| w[i]).collect(),
        max_height: pmax,
        total_width: level_set_measure(pts, &w, 0.5 * pmax),
        offsets: peaks.iter().map(|&i| (pts[i].0 - c).abs()).collect(),
        dip,
        half_height_double: peaks.len() == 2 && dip < 0.5 * pmax,
    })
}

/// Length of `{f : w(f) >= level}` for the piecewise-linear interpolant.
fn level_set_measure(pts: &[(f64, f64)], w: &[f64], level: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..pts.len() {
        let (x0, x1) = (pts[i - 1].0, pts[i].0);
        let (y0, y1) = (w[i - 1], w[i]);
        let dx = x1 - x0;
        total += match (y0 >= level, y1 >= level) {
            (true, true) => dx,
            (true, false) => dx * (y0 - level) / (y0 - y1),
            (false, true) => dx * (y1 - level) / (y1 - y0),
            (false, false) => 0.0,
        };
    }
    total
}

/// Bisects on `omega_big` for the onset of the split in component 2, using
/// the default solver.
pub fn find_split_threshold(params: &SystemParams, omega_lo: f64, omega_hi: f64, tol: f64) -> Result<f64> {
    find_split_threshold_with(params, omega_lo, omega_hi, tol, Eigensolver::default())
}

pub fn find_split_threshold_with(
    params: &SystemParams,
    omega_lo: f64,
    omega_hi: f64,
    tol: f64,
    solver: Eigensolver,
) -> Result<f64> {
    let is_split = |omega: f64| -> Result<bool> {
        let basis = diagonalize_with(&build_matrix(&params.with_omega(omega))?, solver)?;
        Ok(peak_features(&component_profile(&basis, Head::Two))?.peak_count == 2)
    };
    bisect_transition(omega_lo, omega_hi, tol, is_split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(points: Vec<(f64, f64)>) -> ComponentProfile {
        ComponentProfile { component: Head::Two, points, center: 0.0, spacing: 1.0 }
    }

    #[test]
    fn triangle_fwhm() {
        // Squared values 0, 0.5, 1, 0.5, 0 -> half-height set is [-1, 1].
        let s = 0.5f64.sqrt();
        let p = profile(vec![(-2.0, 0.0), (-1.0, s), (0.0, 1.0), (1.0, s), (2.0, 0.0)]);
        let f = peak_features(&p).unwrap();
        assert_eq!(f.peak_count, 1);
        assert!((f.total_width - 2.0).abs() < 1e-15);
        assert_eq!(f.offsets, vec![0.0]);
        assert!(!f.half_height_double);
    }

    #[test]
    fn two_peaks_and_half_height() {
        let pts = [0.0, 0.8, 1.0, 0.9, 0.2, 0.9, 1.0, 0.8, 0.0];
        let p = profile(pts.iter().enumerate().map(|(i, v)| (i as f64 - 4.0, f64::sqrt(*v))).collect());
        let f = peak_features(&p).unwrap();
        assert_eq!(f.peak_count, 2);
        assert_eq!(f.offsets, vec![2.0, 2.0]);
        assert!((f.dip - 0.2).abs() < 1e-15);
        assert!(f.half_height_double);

        let shallow = [0.0, 0.8, 1.0, 0.9, 0.7, 0.9, 1.0, 0.8, 0.0];
        let p = profile(shallow.iter().enumerate().map(|(i, v)| (i as f64 - 4.0, f64::sqrt(*v))).collect());
        let f = peak_features(&p).unwrap();
        assert_eq!(f.peak_count, 2);
        assert!(!f.half_height_double);
    }

    #[test]
    fn degenerate_profile_is_flagged() {
        let p = profile(vec![(-1.0, 1e-9), (0.0, 0.0), (1.0, -1e-9)]);
        assert!(matches!(peak_features(&p), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn off_centre_single_peak() {
        let pts = [0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 0.6];
        let p = profile(pts.iter().enumerate().map(|(i, v)| (i as f64 - 3.0, f64::sqrt(*v))).collect());
        let f = peak_features(&p).unwrap();
        assert_eq!(f.peak_count, 1);
        assert_eq!(f.offsets, vec![2.0]);
    }
}
