//! Small utilities on sampled curves `(x, y)`: bisection on a boolean
//! transition and finite-difference slope metrics.

use crate::error::{Error, Result};

/// Bisects `[lo, hi]` for the point where `flag` switches from false to
/// true, down to an interval of width `tol`. Returns the final midpoint.
pub fn bisect_transition<F>(mut lo: f64, mut hi: f64, tol: f64, mut flag: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Bracketing(format!("empty interval [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let (a, b) = (flag(lo)?, flag(hi)?);
    if a == b {
        return Err(Error::Bracketing(format!("flag is {a} at both ends of [{lo:e}, {hi:e}]")));
    }
    if a {
        return Err(Error::Bracketing(format!("flag is true at {lo:e} but false at {hi:e}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if flag(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Forward-difference slopes, each tagged with its segment midpoint.
pub fn slopes(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .windows(2)
        .map(|w| (0.5 * (w[0].0 + w[1].0), (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
        .collect()
}

/// Midpoint of the segment with the largest (signed) slope.
pub fn knee(points: &[(f64, f64)]) -> Result<f64> {
    slopes(points)
        .into_iter()
        .fold(None, |best: Option<(f64, f64)>, s| match best {
            Some(b) if b.1 >= s.1 => Some(b),
            _ => Some(s),
        })
        .map(|s| s.0)
        .ok_or(Error::Empty("knee needs at least two points"))
}

/// Largest slope among segments whose midpoint lies in `[lo, hi]`.
pub fn max_slope_in(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    slopes(points).into_iter().filter(|s| s.0 >= lo && s.0 <= hi).map(|s| s.1).reduce(f64::max)
}

/// Ratio of the largest to the median slope magnitude in `[lo, hi]`.
/// Large values mean a kink or threshold in that window.
pub fn slope_spike(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    let mut mags: Vec<f64> = slopes(points).into_iter().filter(|s| s.0 >= lo && s.0 <= hi).map(|s| s.1.abs()).collect();
    if mags.is_empty() {
        return None;
    }
    mags.sort_by(f64::total_cmp);
    let m = mags.len();
    let median = if m % 2 == 1 { mags[m / 2] } else { 0.5 * (mags[m / 2 - 1] + mags[m / 2]) };
    Some(mags[m - 1] / median)
}
