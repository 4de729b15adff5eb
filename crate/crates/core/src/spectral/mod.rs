//! The Hermitian coupling matrix, its eigenbasis, and head-component
//! profiles.
//!
//! Coordinates are 0-based throughout: 0 and 1 are the head oscillators,
//! `1 + k` is bath oscillator `k` (`k = 1..=N`).

mod arrowhead;
mod dense;
mod peaks;

use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;

pub use peaks::{find_split_threshold, find_split_threshold_with, peak_features, PeakFeatures};

/// Largest matrix dimension [`build_matrix`] accepts.
pub const DEFAULT_MAX_DIM: usize = 20_002;

/// Relative tolerance for ties in the eigenvector sign convention.
const SIGN_TIE: f64 = 1e-9;

/// Which head oscillator a profile refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    One,
    Two,
}

impl Head {
    pub fn index(self) -> usize {
        match self {
            Head::One => 0,
            Head::Two => 1,
        }
    }

    /// 1 or 2.
    pub fn number(self) -> usize {
        self.index() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eigensolver {
    /// Secular-equation solver exploiting the arrowhead structure, O(n^2).
    #[default]
    Arrowhead,
    /// Dense symmetric QR from nalgebra, O(n^3). Reference path.
    Dense,
}

/// The real symmetric generator `H` of `da/dt = -i H a`.
///
/// Only the parameters are stored; entries are produced on demand and are
/// symmetric bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    params: SystemParams,
}

pub fn build_matrix(params: &SystemParams) -> Result<CouplingMatrix> {
    build_matrix_with_limit(params, DEFAULT_MAX_DIM)
}

pub fn build_matrix_with_limit(params: &SystemParams, max_dim: usize) -> Result<CouplingMatrix> {
    params.validate()?;
    let dim = params.n_bath.saturating_add(2);
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    Ok(CouplingMatrix { params: *params })
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.params.n_bath + 2
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Diagonal entry minus the carrier `omega0`.
    fn detuning(&self, i: usize) -> f64 {
        if i < 2 {
            0.0
        } else {
            self.params.bath_detuning_unchecked(i - 1)
        }
    }

    fn off_diagonal(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.params.omega_big,
            (0, _) => self.params.g,
            _ => 0.0,
        }
    }

    /// Entry `H[i, j]`, 0-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim() && j < self.dim(), "index ({i}, {j}) outside {}", self.dim());
        if i == j {
            if i < 2 {
                self.params.omega0
            } else {
                self.params.omega0 + self.detuning(i)
            }
        } else {
            self.off_diagonal(i, j)
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// `H - omega0 I`, the rotating-frame matrix that is actually diagonalized.
    pub(crate) fn rotating_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| if i == j { self.detuning(i) } else { self.off_diagonal(i, j) })
    }

    /// Frobenius norm of `H`.
    pub fn norm(&self) -> f64 {
        let p = &self.params;
        let mut s = 2.0 * p.omega0 * p.omega0 + 2.0 * p.omega_big * p.omega_big;
        s += 2.0 * p.n_bath as f64 * p.g * p.g;
        for k in 1..=p.n_bath {
            let w = p.omega0 + p.bath_detuning_unchecked(k);
            s += w * w;
        }
        s.sqrt()
    }

    /// `H x` in O(N).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_generic(x, &mut y, self.params.omega0);
        y
    }

    /// `y = (H - shift I) x` for complex `x`, in O(N).
    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64], shift: f64) {
        self.apply_generic(x, y, self.params.omega0 - shift);
    }

    fn apply_generic<T>(&self, x: &[T], y: &mut [T], w0: f64)
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::AddAssign,
    {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let p = &self.params;
        let mut y0 = x[0] * w0 + x[1] * p.omega_big;
        for i in 2..n {
            y0 += x[i] * p.g;
            y[i] = x[i] * (w0 + self.detuning(i)) + x[0] * p.g;
        }
        y[0] = y0;
        y[1] = x[1] * w0 + x[0] * p.omega_big;
    }
}

/// Eigenfrequencies (ascending) and orthonormal eigenvectors of `H`.
///
/// Frequencies are stored relative to `omega0`, so rotating-frame phases
/// `exp(-i (f_k - omega0) t)` carry no cancellation error.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    params: SystemParams,
    solver: Eigensolver,
    detunings: Vec<f64>,
    /// Column-major: entry `i` of vector `k` at `k * dim + i`.
    vectors: Vec<f64>,
    head: [Vec<f64>; 2],
}

/// Worst-case violations of the eigenbasis invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisCheck {
    /// `max_k |H e_k - f_k e_k| / |H|`.
    pub residual: f64,
    /// `max |E^T E - I|`.
    pub orthonormality: f64,
    /// `max_j |sum_k (e_k)_j^2 - 1|` over the head components.
    pub completeness: f64,
    /// `|sum_k (e_k)_1 (e_k)_2|`.
    pub cross: f64,
}

impl BasisCheck {
    pub fn max(&self) -> f64 {
        self.residual.max(self.orthonormality).max(self.completeness).max(self.cross)
    }
}

pub fn diagonalize(h: &CouplingMatrix) -> Result<EigenBasis> {
    diagonalize_with(h, Eigensolver::default())
}

pub fn diagonalize_with(h: &CouplingMatrix, solver: Eigensolver) -> Result<EigenBasis> {
    let dim = h.dim();
    let (values, mut columns) = match solver {
        Eigensolver::Arrowhead => {
            let mut spokes = Vec::with_capacity(dim - 1);
            spokes.push(arrowhead::Spoke { d: 0.0, z: h.params.omega_big, index: 1 });
            for i in 2..dim {
                spokes.push(arrowhead::Spoke { d: h.detuning(i), z: h.params.g, index: i });
            }
            let e = arrowhead::solve(0.0, 0, &spokes, dim)?;
            (e.values, e.vectors)
        }
        Eigensolver::Dense => dense::solve(h.rotating_dense())?,
    };
    if values.len() != dim || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(format!("{solver:?} solver returned an incomplete spectrum")));
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut detunings = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim * dim);
    for &k in &order {
        detunings.push(values[k]);
        let v = &mut columns[k];
        fix_sign(v);
        vectors.extend_from_slice(v);
    }
    let head = [0, 1].map(|j| (0..dim).map(|k| vectors[k * dim + j]).collect());
    Ok(EigenBasis { params: h.params, solver, detunings, vectors, head })
}

/// Makes the largest-magnitude entry positive; near-ties go to the lowest index.
fn fix_sign(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(i) = v.iter().position(|x| x.abs() >= m * (1.0 - SIGN_TIE)) {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn solver(&self) -> Eigensolver {
        self.solver
    }

    /// `f_k - omega0`, ascending.
    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    /// Eigenfrequencies `f_k`, ascending.
    pub fn freqs(&self) -> Vec<f64> {
        self.detunings.iter().map(|d| self.params.omega0 + d).collect()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.len();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `(e_k)_j` for every `k`, for head component `j`.
    pub fn head_row(&self, j: Head) -> &[f64] {
        &self.head[j.index()]
    }

    /// Identifier of this basis: parameters and solver, hashed.
    pub fn id(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let p = &self.params;
        (p.n_bath, p.delta_omega.to_bits(), p.g.to_bits(), p.omega_big.to_bits(), p.omega0.to_bits()).hash(&mut h);
        (self.solver as u8).hash(&mut h);
        h.finish()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.len(), self.len(), &self.vectors)
    }

    /// Measures the invariants against the matrix that produced this basis.
    /// O(n^3) because of the orthonormality check.
    pub fn check(&self, h: &CouplingMatrix) -> Result<BasisCheck> {
        let n = self.len();
        if h.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: h.dim() });
        }
        let hn = h.norm().max(f64::MIN_POSITIVE);
        let mut residual = 0.0f64;
        for k in 0..n {
            let v = self.vector(k);
            let hv = h.apply(v);
            let f = self.params.omega0 + self.detunings[k];
            let r = hv.iter().zip(v).map(|(a, b)| (a - f * b).powi(2)).sum::<f64>().sqrt();
            residual = residual.max(r / hn);
        }
        let e = self.to_matrix();
        let gram = e.transpose() * &e;
        let mut orthonormality = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                orthonormality = orthonormality.max((gram[(i, j)] - target).abs());
            }
        }
        let sq = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
        let completeness = (sq(&self.head[0]) - 1.0).abs().max((sq(&self.head[1]) - 1.0).abs());
        let cross = self.head[0].iter().zip(&self.head[1]).map(|(a, b)| a * b).sum::<f64>().abs();
        Ok(BasisCheck { residual, orthonormality, completeness, cross })
    }
}

/// Signed head component `(e_k)_j` against `f_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentProfile {
    pub component: Head,
    /// `(f_k, (e_k)_j)`, ascending in `f_k`.
    pub points: Vec<(f64, f64)>,
    /// Carrier `omega0`, the reference for peak offsets.
    pub center: f64,
    /// Bath spacing, for resolution checks.
    pub spacing: f64,
}

pub fn component_profile(basis: &EigenBasis, j: Head) -> ComponentProfile {
    let w0 = basis.params.omega0;
    let points = basis.detunings.iter().zip(basis.head_row(j)).map(|(d, v)| (w0 + d, *v)).collect();
    ComponentProfile { component: j, points, center: w0, spacing: basis.params.delta_omega }
}

/// Convenience: build, diagonalize and take both head profiles.
pub fn profiles(params: &SystemParams, solver: Eigensolver) -> Result<(EigenBasis, ComponentProfile, ComponentProfile)> {
    let basis = diagonalize_with(&build_matrix(params)?, solver)?;
    let p1 = component_profile(&basis, Head::One);
    let p2 = component_profile(&basis, Head::Two);
    Ok((basis, p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_matches_dense() {
        let p = SystemParams::new(5, 0.3, 0.2, 0.7, 1.5).unwrap();
        let h = build_matrix(&p).unwrap();
        let x: Vec<f64> = (0..7).map(|i| (i as f64 * 1.3).sin()).collect();
        let y = h.apply(&x);
        let yd = h.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..7 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_convention_tie_goes_low() {
        let mut v = vec![-0.5, 0.5, 0.1];
        fix_sign(&mut v);
        assert_eq!(v, vec![0.5, -0.5, -0.1]);
        let mut w = vec![0.1, -0.9, 0.2];
        fix_sign(&mut w);
        assert_eq!(w, vec![-0.1, 0.9, -0.2]);
    }
}
