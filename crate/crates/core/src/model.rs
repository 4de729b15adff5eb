//! Physical parameters of the two-oscillator + finite-bath model.
//!
//! Oscillator 1 couples to oscillator 2 with strength `omega_big` and to each
//! of `n_bath` bath oscillators with strength `g`. Bath frequencies sit on a
//! uniform grid `omega0 + delta_omega * (k - N/2)`, `k = 1..=N`. Units are
//! radians per unit time with hbar = 1.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_bath: usize,
    pub delta_omega: f64,
    pub g: f64,
    pub omega_big: f64,
    #[serde(default)]
    pub omega0: f64,
}

/// Quantities that follow from [`SystemParams`] alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Markovian decay rate of oscillator 1, `pi g^2 / delta_omega`.
    pub gamma: f64,
    /// Exceptional point of the reduced 2x2 model, `gamma / 2`.
    pub omega_ep: f64,
    /// Symmetry-emergence threshold, `gamma / sqrt(2)`.
    pub omega_sse: f64,
    /// Bath return time `2 pi / delta_omega`.
    pub t_return: f64,
}

impl SystemParams {
    pub fn new(n_bath: usize, delta_omega: f64, g: f64, omega_big: f64, omega0: f64) -> Result<Self> {
        let p = Self { n_bath, delta_omega, g, omega_big, omega0 };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a bath band width `n_bath * delta_omega` and a
    /// target decay rate, solving `gamma = pi g^2 / delta_omega` for `g`.
    pub fn from_band(n_bath: usize, band_width: f64, gamma: f64, omega_big: f64, omega0: f64) -> Result<Self> {
        if n_bath == 0 {
            return Err(Error::InvalidParams("n_bath must be at least 1".into()));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be non-negative, got {gamma}")));
        }
        let delta_omega = band_width / n_bath as f64;
        let g = (gamma * delta_omega / PI).sqrt();
        Self::new(n_bath, delta_omega, g, omega_big, omega0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bath == 0 {
            return Err(Error::InvalidParams("n_bath must be at least 1".into()));
        }
        if !(self.delta_omega > 0.0) || !self.delta_omega.is_finite() {
            return Err(Error::InvalidParams(format!(
                "delta_omega must be positive and finite, got {}",
                self.delta_omega
            )));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidParams(format!("g must be non-negative, got {}", self.g)));
        }
        if !(self.omega_big >= 0.0) || !self.omega_big.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega_big must be non-negative, got {}",
                self.omega_big
            )));
        }
        if !self.omega0.is_finite() {
            return Err(Error::InvalidParams("omega0 must be finite".into()));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        PI * self.g * self.g / self.delta_omega
    }

    pub fn omega_ep(&self) -> f64 {
        self.gamma() / 2.0
    }

    pub fn omega_sse(&self) -> f64 {
        self.gamma() * FRAC_1_SQRT_2
    }

    pub fn t_return(&self) -> f64 {
        2.0 * PI / self.delta_omega
    }

    pub fn band_width(&self) -> f64 {
        self.n_bath as f64 * self.delta_omega
    }

    /// Copy with a different head-head coupling.
    pub fn with_omega(&self, omega_big: f64) -> Self {
        Self { omega_big, ..*self }
    }

    /// Bath frequency relative to the carrier, `delta_omega * (k - N/2)`.
    /// No range check; `k` is 1-based.
    pub(crate) fn bath_detuning_unchecked(&self, k: usize) -> f64 {
        self.delta_omega * (k as f64 - self.n_bath as f64 / 2.0)
    }

    /// Rescales to `n_new` bath oscillators keeping `gamma` and the band
    /// width `N * delta_omega` fixed (`delta_omega ~ 1/N`, `g ~ 1/sqrt(N)`).
    pub fn scale_to(&self, n_new: usize) -> Result<Self> {
        if n_new == 0 {
            return Err(Error::InvalidParams("n_new must be at least 1".into()));
        }
        if n_new == self.n_bath {
            return Ok(*self);
        }
        let ratio = self.n_bath as f64 / n_new as f64;
        Ok(Self {
            n_bath: n_new,
            delta_omega: self.delta_omega * self.n_bath as f64 / n_new as f64,
            g: self.g * ratio.sqrt(),
            ..*self
        })
    }

    /// Parses a flat `key = value` listing (`#` starts a comment) on top of
    /// `self`. Recognised keys: `n_bath`, `delta_omega`, `g`, `omega_big`,
    /// `omega0`. Unknown keys are returned to the caller untouched.
    pub fn apply_key_values(&self, text: &str) -> Result<(Self, Vec<(String, String)>)> {
        let mut p = *self;
        let mut rest = Vec::new();
        for (key, value) in parse_key_values(text)? {
            let float = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParams(format!("{key}: cannot parse '{value}' as a number")))
            };
            match key.as_str() {
                "n_bath" => {
                    p.n_bath = value
                        .parse()
                        .map_err(|_| Error::InvalidParams(format!("n_bath: cannot parse '{value}'")))?
                }
                "delta_omega" => p.delta_omega = float()?,
                "g" => p.g = float()?,
                "omega_big" => p.omega_big = float()?,
                "omega0" => p.omega0 = float()?,
                _ => rest.push((key, value)),
            }
        }
        p.validate()?;
        Ok((p, rest))
    }
}

/// Splits a flat key-value text into pairs. Accepts `key = value` and
/// `key: value`; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::InvalidParams(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::InvalidParams(format!("line {}: empty key", lineno + 1)));
        }
        out.push((k.to_string(), v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

pub fn derive_constants(params: &SystemParams) -> Result<DerivedConstants> {
    if !(params.delta_omega > 0.0) {
        return Err(Error::InvalidParams(format!(
            "delta_omega must be positive, got {}",
            params.delta_omega
        )));
    }
    Ok(DerivedConstants {
        gamma: params.gamma(),
        omega_ep: params.omega_ep(),
        omega_sse: params.omega_sse(),
        t_return: params.t_return(),
    })
}

/// Frequency of bath oscillator `k` (1-based).
pub fn bath_frequency(params: &SystemParams, k: usize) -> Result<f64> {
    if k == 0 || k > params.n_bath {
        return Err(Error::OutOfRange { index: k, max: params.n_bath });
    }
    Ok(params.omega0 + params.bath_detuning_unchecked(k))
}

/// Initial amplitudes of both head oscillators and the bath.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub a1: Complex64,
    pub a2: Complex64,
    pub bath: Vec<Complex64>,
}

impl InitialState {
    /// Head amplitudes with an empty (all-zero) bath.
    pub fn head(a1: Complex64, a2: Complex64, n_bath: usize) -> Self {
        Self { a1, a2, bath: vec![Complex64::new(0.0, 0.0); n_bath] }
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        if self.bath.len() != params.n_bath {
            return Err(Error::DimensionMismatch { expected: params.n_bath, actual: self.bath.len() });
        }
        Ok(())
    }

    /// Full state vector ordered (a1, a2, b_1, ..., b_N).
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.bath.len() + 2);
        v.push(self.a1);
        v.push(self.a2);
        v.extend_from_slice(&self.bath);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr() + self.bath.iter().map(|b| b.norm_sqr()).sum::<f64>()
    }

    pub fn is_bath_empty(&self) -> bool {
        self.bath.iter().all(|b| *b == Complex64::new(0.0, 0.0))
    }
}
