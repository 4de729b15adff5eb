//! Resolved, serializable run configurations.
//!
//! Every command turns its flags into a [`RunConfig`] holding absolute
//! couplings and explicit defaults, so a run can be replayed from the JSON
//! alone. The config hash is the SHA-256 of its canonical JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sse_core::dynamics::EnsembleSpec;
use sse_core::{Eigensolver, SystemParams};

use crate::args::{EnsembleArgs, InitMode, ModelArgs, OmegaArgs, OmegaUnit};
use crate::error::{CliError, CliResult};

/// Bath size, band width and decay rate of the default model.
pub const DEFAULT_N: usize = 400;
pub const DEFAULT_BAND: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: SystemParams,
    pub svg: bool,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    Eigenprofile {
        omegas: Vec<f64>,
        n_list: Vec<usize>,
        solver: Eigensolver,
    },
    RatioSweep {
        omegas: Vec<f64>,
        t_max_tr: f64,
        ensemble: EnsembleSpec,
    },
    ScalingStudy {
        omegas: Vec<f64>,
        n_list: Vec<usize>,
        t_max_tr: f64,
        ensemble: EnsembleSpec,
    },
    NhCompare {
        omega: f64,
        t_max_tr: f64,
        samples: usize,
        ratio_omegas: Vec<f64>,
        ratio_t_max_tr: f64,
    },
    NoiseSpectrum {
        omegas: Vec<f64>,
        temperature: f64,
        realizations: usize,
        seed: u64,
        t_max: f64,
        dt: f64,
        bisect: Option<(f64, f64, f64)>,
    },
    Estimator {
        omegas: Vec<f64>,
        t_max_tr: f64,
        ensemble: EnsembleSpec,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Eigenprofile { .. } => "eigenprofile",
            Experiment::RatioSweep { .. } => "ratio-sweep",
            Experiment::ScalingStudy { .. } => "scaling-study",
            Experiment::NhCompare { .. } => "nh-compare",
            Experiment::NoiseSpectrum { .. } => "noise-spectrum",
            Experiment::Estimator { .. } => "estimator",
        }
    }
}

impl RunConfig {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Default model, then the config file, then flags. `--n-bath` on its own
/// rescales the model at fixed gamma and band width; together with
/// `--delta-omega` or `--g` it is taken literally.
pub fn resolve_params(m: &ModelArgs) -> CliResult<(SystemParams, Option<f64>)> {
    let mut p = SystemParams::from_band(DEFAULT_N, DEFAULT_BAND, DEFAULT_GAMMA, 0.0, 0.0)?;
    let mut file_omega = None;
    let mut file_sets_grid = false;
    if let Some(path) = &m.config {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let (q, unknown) = p.apply_key_values(&text)?;
        if let Some((k, _)) = unknown.first() {
            return Err(CliError::Config(format!("{}: unknown key `{k}`", path.display())));
        }
        let keys: Vec<String> = sse_core::model::parse_key_values(&text)?.into_iter().map(|(k, _)| k).collect();
        file_sets_grid = keys.iter().any(|k| k == "delta_omega" || k == "g");
        if keys.iter().any(|k| k == "omega_big") {
            file_omega = Some(q.omega_big);
        }
        p = q;
    }
    if let Some(n) = m.n_bath {
        if m.delta_omega.is_none() && m.g.is_none() && !file_sets_grid {
            p = p.scale_to(n)?;
        } else {
            p.n_bath = n;
        }
    }
    if let Some(d) = m.delta_omega {
        p.delta_omega = d;
    }
    if let Some(g) = m.g {
        p.g = g;
    }
    if let Some(w0) = m.omega0 {
        p.omega0 = w0;
    }
    p.validate()?;
    Ok((p, file_omega))
}

fn unit_scale(p: &SystemParams, unit: OmegaUnit) -> f64 {
    match unit {
        OmegaUnit::Sse => p.omega_sse(),
        OmegaUnit::Abs => 1.0,
    }
}

/// `lo:hi:points`, inclusive.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("grid `{spec}` is not lo:hi:points")));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| config_err(format!("grid `{spec}`: {e}")))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| config_err(format!("grid `{spec}`: {e}")))?;
    let n: usize = parts[2].trim().parse().map_err(|e| config_err(format!("grid `{spec}`: {e}")))?;
    if !(lo.is_finite() && hi.is_finite()) || n == 0 || (n == 1 && lo != hi) || (n > 1 && !(hi > lo)) {
        return Err(config_err(format!("grid `{spec}` is empty or reversed")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

/// `lo:hi`.
pub fn parse_pair(spec: &str) -> CliResult<(f64, f64)> {
    let (a, b) = spec.split_once(':').ok_or_else(|| config_err(format!("`{spec}` is not lo:hi")))?;
    let lo: f64 = a.trim().parse().map_err(|e| config_err(format!("`{spec}`: {e}")))?;
    let hi: f64 = b.trim().parse().map_err(|e| config_err(format!("`{spec}`: {e}")))?;
    if !(lo < hi) {
        return Err(config_err(format!("`{spec}` is empty or reversed")));
    }
    Ok((lo, hi))
}

/// Absolute, strictly ascending couplings. `default_rel` is in units of
/// gamma / sqrt(2) and is used when no flag and no config value is given.
pub fn resolve_omegas(
    p: &SystemParams,
    o: &OmegaArgs,
    file_omega: Option<f64>,
    default_rel: &[f64],
) -> CliResult<Vec<f64>> {
    let scale = unit_scale(p, o.omega_unit);
    let omegas: Vec<f64> = if let Some(g) = &o.omega_grid {
        parse_grid(g)?.into_iter().map(|x| x * scale).collect()
    } else if !o.omega.is_empty() {
        o.omega.iter().map(|x| x * scale).collect()
    } else if let Some(w) = file_omega {
        vec![w]
    } else {
        default_rel.iter().map(|x| x * p.omega_sse()).collect()
    };
    check_omegas(&omegas)?;
    Ok(omegas)
}

pub fn check_omegas(omegas: &[f64]) -> CliResult<()> {
    if omegas.is_empty() {
        return Err(config_err("empty coupling list"));
    }
    if omegas.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(config_err("couplings must be finite and non-negative"));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config_err("couplings must be strictly ascending"));
    }
    Ok(())
}

pub fn default_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    parse_grid(&format!("{lo}:{hi}:{points}")).expect("static grid")
}

pub fn resolve_ensemble(e: &EnsembleArgs) -> CliResult<EnsembleSpec> {
    Ok(match e.init {
        InitMode::Random => {
            if e.ensemble == 0 {
                return Err(config_err("--ensemble must be at least 1"));
            }
            EnsembleSpec::Random { n_states: e.ensemble, seed: e.seed }
        }
        InitMode::Unit => EnsembleSpec::Unit,
        InitMode::Eigenplus => EnsembleSpec::EigenPlus,
    })
}

pub fn resolve_horizon(t: Option<f64>, default: f64) -> CliResult<f64> {
    let t = t.unwrap_or(default);
    if !(t > 0.0 && t.is_finite()) {
        return Err(config_err(format!("averaging horizon must be positive, got {t}")));
    }
    Ok(t)
}

pub fn check_n_list(n_list: &[usize]) -> CliResult<()> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(config_err("bath sizes must be a non-empty list of positive integers"));
    }
    Ok(())
}

pub fn read_config_json(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_inclusive() {
        assert_eq!(parse_grid("0.5:1.5:3").unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(parse_grid("0.1:4:40").unwrap().last(), Some(&4.0));
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        for bad in ["1:0:3", "0:1:0", "0:1", "a:1:2", "0:1:1", "nan:1:2"] {
            assert!(matches!(parse_grid(bad), Err(CliError::Config(_))), "{bad}");
        }
        assert_eq!(parse_pair("0.5:1.5").unwrap(), (0.5, 1.5));
        assert!(parse_pair("1.5:0.5").is_err());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn canonical_json_survives_a_round_trip() {
        let params = SystemParams::from_band(DEFAULT_N, DEFAULT_BAND, DEFAULT_GAMMA, 0.1, 0.0).unwrap();
        let config = RunConfig {
            params,
            svg: false,
            experiment: Experiment::NoiseSpectrum {
                omegas: vec![0.1 + 0.2, 1.0 / 3.0, std::f64::consts::PI * 1e-7],
                temperature: 1.0,
                realizations: 64,
                seed: u64::MAX,
                t_max: 4e4,
                dt: 0.5 * 0.1 / 3.0,
                bisect: Some((0.3, 0.7, 1e-3 / 7.0)),
            },
        };
        let text = config.canonical_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.sha256(), config.sha256());
    }

    #[test]
    fn omega_lists_are_checked() {
        assert!(check_omegas(&[]).is_err());
        assert!(check_omegas(&[0.1, 0.1]).is_err());
        assert!(check_omegas(&[-0.1, 0.1]).is_err());
        assert!(check_omegas(&[0.0, f64::INFINITY]).is_err());
        assert!(check_omegas(&[0.0, 0.1]).is_ok());
    }
}
