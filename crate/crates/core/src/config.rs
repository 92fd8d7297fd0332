//! Protocol parameters and the flat key-value configuration format.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::HBAR;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key `{key}` on line {line}")]
    DuplicateKey { key: String, line: usize },
    #[error("invalid value for `{key}` on line {line}: {reason}")]
    InvalidValue {
        key: String,
        line: usize,
        reason: String,
    },
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// All physical parameters of the squeeze–release–recapture protocol.
///
/// Frequencies are angular [rad/s], times in seconds, `theta` in radians,
/// `gamma_bg` in K/s, `noise_floor` (per-shot position measurement noise) in
/// meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Particle mass [kg].
    pub m: f64,
    /// Trap frequency in the cooling/recapture potential [rad/s].
    pub omega0: f64,
    /// Trap frequency during state preparation [rad/s].
    pub omega1: f64,
    /// State-preparation duration [s].
    pub t_sp: f64,
    /// Free-expansion duration [s].
    pub t_tof: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Tilt of the trap axis against the horizontal plane [rad].
    pub theta: f64,
    /// Initial phonon occupation of the z mode.
    pub n: f64,
    /// Background-gas heating rate [K/s].
    pub gamma_bg: f64,
    /// Per-shot position readout noise floor [m].
    pub noise_floor: f64,
}

const KEYS: [&str; 10] = [
    "m",
    "omega0",
    "omega1",
    "t_sp",
    "t_tof",
    "g",
    "theta",
    "n",
    "gamma_bg",
    "noise_floor",
];

impl ProtocolConfig {
    /// Nominal parameters of the modeled experiment: a 3.2e-17 kg particle at
    /// ω₀/2π = 221 kHz, ω₁/2π = 37.3 kHz, n = 0.75, tilted by −2.62°, with a
    /// 16 mK/s background-gas heating rate and a 9 pm readout noise floor.
    pub fn nominal() -> Self {
        ProtocolConfig {
            m: 3.2e-17,
            omega0: 2.0 * PI * 221e3,
            omega1: 2.0 * PI * 37.3e3,
            t_sp: 0.0,
            t_tof: 100e-6,
            g: 9.798,
            theta: -2.62_f64.to_radians(),
            n: 0.75,
            gamma_bg: 16e-3,
            noise_floor: 9e-12,
        }
    }

    /// Thermal-occupation scale factor κ = 2n + 1.
    pub fn kappa(&self) -> f64 {
        2.0 * self.n + 1.0
    }

    /// Quarter period of the state-preparation potential, π/(2ω₁).
    pub fn quarter_period(&self) -> f64 {
        PI / (2.0 * self.omega1)
    }

    /// Copy with `t_sp` set to the quarter period (canonical prepared protocol).
    pub fn with_prep(&self) -> Self {
        ProtocolConfig {
            t_sp: self.quarter_period(),
            ..*self
        }
    }

    /// Copy with `t_sp = 0` (no state preparation).
    pub fn without_prep(&self) -> Self {
        ProtocolConfig { t_sp: 0.0, ..*self }
    }

    /// Zero-point position spread √(ħ/2mω) [m] at trap frequency `omega`.
    pub fn zpf_z(&self, omega: f64) -> f64 {
        (HBAR / (2.0 * self.m * omega)).sqrt()
    }

    /// Zero-point momentum spread √(ħmω/2) [kg·m/s] at trap frequency `omega`.
    pub fn zpf_p(&self, omega: f64) -> f64 {
        (HBAR * self.m * omega / 2.0).sqrt()
    }

    /// Zero-point velocity spread √(ħω/2m) [m/s] at trap frequency `omega`.
    pub fn zpf_v(&self, omega: f64) -> f64 {
        (HBAR * omega / (2.0 * self.m)).sqrt()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(field: &'static str, ok: bool, reason: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::InvalidField {
                    field,
                    reason: reason.to_string(),
                })
            }
        }
        check("m", self.m.is_finite() && self.m > 0.0, "must be > 0")?;
        check(
            "omega0",
            self.omega0.is_finite() && self.omega0 > 0.0,
            "must be > 0",
        )?;
        check(
            "omega1",
            self.omega1.is_finite() && self.omega1 > 0.0 && self.omega1 < self.omega0,
            "must satisfy 0 < omega1 < omega0",
        )?;
        check(
            "t_sp",
            self.t_sp.is_finite() && self.t_sp >= 0.0,
            "must be >= 0",
        )?;
        check(
            "t_tof",
            self.t_tof.is_finite() && self.t_tof >= 0.0,
            "must be >= 0",
        )?;
        check("g", self.g.is_finite(), "must be finite")?;
        check("theta", self.theta.is_finite(), "must be finite")?;
        check("n", self.n.is_finite() && self.n >= 0.0, "must be >= 0")?;
        check(
            "gamma_bg",
            self.gamma_bg.is_finite() && self.gamma_bg >= 0.0,
            "must be >= 0",
        )?;
        check(
            "noise_floor",
            self.noise_floor.is_finite() && self.noise_floor >= 0.0,
            "must be >= 0",
        )?;
        Ok(())
    }

    /// Parse the flat `key = value` format (`#` starts a comment).
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut values: [Option<f64>; 10] = [None; 10];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(line_no))?;
            let key = key.trim();
            let value = value.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| ConfigError::UnknownKey {
                    key: key.to_string(),
                    line: line_no,
                })?;
            if values[slot].is_some() {
                return Err(ConfigError::DuplicateKey {
                    key: key.to_string(),
                    line: line_no,
                });
            }
            let parsed = value
                .parse::<f64>()
                .map_err(|e| ConfigError::InvalidValue {
                    key: key.to_string(),
                    line: line_no,
                    reason: e.to_string(),
                })?;
            values[slot] = Some(parsed);
        }
        let get = |i: usize| values[i].ok_or(ConfigError::MissingKey(KEYS[i]));
        let cfg = ProtocolConfig {
            m: get(0)?,
            omega0: get(1)?,
            omega1: get(2)?,
            t_sp: get(3)?,
            t_tof: get(4)?,
            g: get(5)?,
            theta: get(6)?,
            n: get(7)?,
            gamma_bg: get(8)?,
            noise_floor: get(9)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Render in the same flat format accepted by [`ProtocolConfig::parse_str`].
    pub fn to_config_string(&self) -> String {
        format!(
            "m = {:e}\nomega0 = {:e}\nomega1 = {:e}\nt_sp = {:e}\nt_tof = {:e}\n\
             g = {}\ntheta = {:e}\nn = {}\ngamma_bg = {:e}\nnoise_floor = {:e}\n",
            self.m,
            self.omega0,
            self.omega1,
            self.t_sp,
            self.t_tof,
            self.g,
            self.theta,
            self.n,
            self.gamma_bg,
            self.noise_floor
        )
    }
}
