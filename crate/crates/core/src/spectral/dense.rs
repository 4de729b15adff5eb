//! Dense reference path: Householder tridiagonalization plus implicit QR
//! from nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const SWEEPS_PER_DIM: usize = 100;

pub(crate) fn solve(m: DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, SWEEPS_PER_DIM * n.max(1))
        .ok_or_else(|| Error::NoConvergence(format!("dense symmetric QR on {n}x{n} matrix")))?;
    let values = eig.eigenvalues.iter().copied().collect();
    let vectors = (0..n).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
    Ok((values, vectors))
}
