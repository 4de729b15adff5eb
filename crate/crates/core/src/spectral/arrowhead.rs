//! Structured eigensolver for symmetric arrowhead matrices.
//!
//! In the rotating frame the coupling matrix is an arrowhead: oscillator 1
//! is the tip, and oscillator 2 plus every bath mode is a spoke with its own
//! diagonal entry and a single coupling to the tip. Such a matrix is solved
//! in O(n^2) by
//!
//! 1. deflating spokes with negligible coupling and merging spokes with
//!    (numerically) equal diagonals through Givens rotations,
//! 2. bisecting the secular equation
//!    `F(l) = l - alpha - sum_i z_i^2 / (l - d_i)` on each interlacing
//!    interval, with every root stored as an offset from its nearest pole,
//! 3. recomputing the spokes from the computed roots (Gu and Eisenstat) so
//!    the eigenvectors come out orthogonal to working precision.

use crate::error::{Error, Result};

/// A spoke: diagonal entry `d`, coupling `z` to the tip, and the original
/// coordinate it lives on.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Spoke {
    pub d: f64,
    pub z: f64,
    pub index: usize,
}

/// Eigenpairs of an arrowhead matrix, unsorted; vectors are dense columns of
/// length `dim`.
pub(crate) struct ArrowheadEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// A spoke after deflation. `dir` is a unit vector in the original
/// coordinates (several entries once spokes have been merged).
struct Active {
    d: f64,
    z: f64,
    dir: Vec<(usize, f64)>,
}

/// Root of the secular equation stored as `d[origin] + mu`.
#[derive(Clone, Copy)]
struct Root {
    origin: usize,
    mu: f64,
}

const MAX_BISECTIONS: usize = 2000;

pub(crate) fn solve(alpha: f64, tip: usize, spokes: &[Spoke], dim: usize) -> Result<ArrowheadEigen> {
    let zmax = spokes.iter().fold(0.0f64, |m, s| m.max(s.z.abs()));
    let dmax = spokes.iter().fold(alpha.abs(), |m, s| m.max(s.d.abs()));
    let tol = 8.0 * f64::EPSILON * dmax.max(zmax);

    let mut values = Vec::with_capacity(dim);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let unit = |pairs: &[(usize, f64)]| {
        let mut v = vec![0.0; dim];
        for &(i, x) in pairs {
            v[i] += x;
        }
        v
    };

    // Deflate decoupled spokes, then merge equal diagonals.
    let mut live: Vec<Spoke> = Vec::with_capacity(spokes.len());
    for s in spokes {
        if s.z.abs() <= tol {
            values.push(s.d);
            vectors.push(unit(&[(s.index, 1.0)]));
        } else {
            live.push(*s);
        }
    }
    live.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.index.cmp(&b.index)));

    let mut active: Vec<Active> = Vec::with_capacity(live.len());
    for s in live {
        match active.last_mut() {
            Some(prev) if s.d - prev.d <= tol => {
                let r = prev.z.hypot(s.z);
                let (c, sn) = (prev.z / r, s.z / r);
                // The rotated-away combination is an exact eigenvector at d.
                let mut w: Vec<(usize, f64)> = prev.dir.iter().map(|&(i, x)| (i, -sn * x)).collect();
                w.push((s.index, c));
                values.push(prev.d);
                vectors.push(unit(&w));
                for e in prev.dir.iter_mut() {
                    e.1 *= c;
                }
                prev.dir.push((s.index, sn));
                prev.z = r;
            }
            _ => active.push(Active { d: s.d, z: s.z, dir: vec![(s.index, 1.0)] }),
        }
    }

    if active.is_empty() {
        values.push(alpha);
        vectors.push(unit(&[(tip, 1.0)]));
        return Ok(ArrowheadEigen { values, vectors });
    }

    let d: Vec<f64> = active.iter().map(|a| a.d).collect();
    let z2: Vec<f64> = active.iter().map(|a| a.z * a.z).collect();
    let znorm = z2.iter().sum::<f64>().sqrt();
    let n = d.len();

    let roots = (0..=n).map(|j| secular_root(alpha, &d, &z2, znorm, j)).collect::<Result<Vec<_>>>()?;

    // Distance d[i] - lambda_j, evaluated without forming lambda_j.
    let gap = |i: usize, r: &Root| (d[i] - d[r.origin]) - r.mu;

    let zhat: Vec<f64> = (0..n)
        .map(|i| {
            let mut p = (-gap(i, &roots[n])) * gap(i, &roots[0]);
            for k in 0..i {
                p *= gap(i, &roots[k + 1]) / (d[i] - d[k]);
            }
            for k in i + 1..n {
                p *= gap(i, &roots[k]) / (d[i] - d[k]);
            }
            p.abs().sqrt().copysign(active[i].z)
        })
        .collect();

    for r in &roots {
        let mut x: Vec<f64> = (0..n).map(|i| -zhat[i] / gap(i, r)).collect();
        let norm = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let mut v = vec![0.0; dim];
        v[tip] = 1.0 / norm;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi /= norm;
            for &(idx, c) in &active[i].dir {
                v[idx] += c * *xi;
            }
        }
        values.push(d[r.origin] + r.mu);
        vectors.push(v);
    }

    Ok(ArrowheadEigen { values, vectors })
}

/// Secular function at `d[origin] + mu`.
fn secular(alpha: f64, d: &[f64], z2: &[f64], origin: usize, mu: f64) -> f64 {
    let base = d[origin];
    let mut s = (base - alpha) + mu;
    for (di, zi) in d.iter().zip(z2) {
        s -= zi / ((base - di) + mu);
    }
    s
}

/// The `j`-th root (0-based, ascending) of the secular equation. Root `j`
/// lies strictly between poles `j - 1` and `j`.
fn secular_root(alpha: f64, d: &[f64], z2: &[f64], znorm: f64, j: usize) -> Result<Root> {
    let n = d.len();
    let (origin, mut lo, mut hi) = if j == 0 {
        (0, alpha.min(d[0]) - znorm - d[0], 0.0)
    } else if j == n {
        (n - 1, 0.0, alpha.max(d[n - 1]) + znorm - d[n - 1])
    } else {
        let half = 0.5 * (d[j] - d[j - 1]);
        if secular(alpha, d, z2, j - 1, half) >= 0.0 {
            (j - 1, 0.0, half)
        } else {
            (j, -half, 0.0)
        }
    };

    // F is increasing on the bracket and never evaluated at the pole.
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Never land on the pole itself.
            let mu = if mid != 0.0 { mid } else if lo == 0.0 { hi } else { lo };
            return Ok(Root { origin, mu });
        }
        let f = secular(alpha, d, z2, origin, mid);
        if f.is_nan() {
            return Err(Error::NoConvergence(format!("secular equation returned NaN for root {j}")));
        }
        if f > 0.0 {
            hi = mid;
        } else if f < 0.0 {
            lo = mid;
        } else {
            return Ok(Root { origin, mu: mid });
        }
    }
    Err(Error::NoConvergence(format!("secular root {j} not bracketed after {MAX_BISECTIONS} bisections")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // [[0, 1], [1, 0]] -> eigenvalues -1, +1.
        let e = solve(0.0, 0, &[Spoke { d: 0.0, z: 1.0, index: 1 }], 2).unwrap();
        let mut v = e.values.clone();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merged_spokes_give_exact_eigenvector() {
        let spokes = [Spoke { d: 0.5, z: 3.0, index: 1 }, Spoke { d: 0.5, z: 4.0, index: 2 }];
        let e = solve(0.0, 0, &spokes, 3).unwrap();
        let k = e.values.iter().position(|&l| l == 0.5).unwrap();
        let v = &e.vectors[k];
        assert!((v[0]).abs() < 1e-15);
        assert!((v[1] + 0.8).abs() < 1e-15 && (v[2] - 0.6).abs() < 1e-15);
    }
}
