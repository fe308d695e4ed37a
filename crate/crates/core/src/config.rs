//! Run configuration: a flat `key = value` file, overridable from flags.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{GapMethod, IdentityMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Family descriptor, e.g. `cyclic:4,8` or `box:cyclic:2,4,8`.
    pub family: String,
    /// Generating entourage radius; systems are raised to `Δ_R` when > 1.
    pub radius: u32,
    pub p_values: Vec<f64>,
    pub threshold: f64,
    pub k_max: usize,
    /// Kazhdan-table stopping tolerance.
    pub tol: f64,
    /// Convergence tolerance of the ℓ² solver.
    pub gap_tol: f64,
    pub seed: u64,
    pub budget: usize,
    pub out: PathBuf,
    pub identity: IdentityMode,
    pub method: GapMethod,
    pub dense_limit: usize,
    pub witness_samples: usize,
    pub lp_restarts: usize,
    pub decompose_samples: usize,
    pub mazur_ks: Vec<f64>,
    pub mazur_radius: u32,
    pub mazur_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: String::new(),
            radius: 1,
            p_values: vec![1.5, 2.0, 3.0],
            threshold: 0.999,
            k_max: 200,
            tol: 1e-12,
            gap_tol: 1e-10,
            seed: 0,
            budget: 10_000,
            out: PathBuf::from("out"),
            identity: IdentityMode::Include,
            method: GapMethod::Lanczos,
            dense_limit: 512,
            witness_samples: 10_000,
            lp_restarts: 32,
            decompose_samples: 1000,
            mazur_ks: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            mazur_radius: 1,
            mazur_samples: 200,
        }
    }
}

fn parse_value<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|t| parse_value(t.trim())).collect()
}

impl RunConfig {
    /// Sets one key; errors carry no position (callers add it).
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "family" => self.family = value.to_string(),
            "radius" => self.radius = parse_value(value)?,
            "p" => self.p_values = parse_list(value)?,
            "threshold" => self.threshold = parse_value(value)?,
            "kmax" => self.k_max = parse_value(value)?,
            "tol" => self.tol = parse_value(value)?,
            "gap_tol" => self.gap_tol = parse_value(value)?,
            "seed" => self.seed = parse_value(value)?,
            "budget" => self.budget = parse_value(value)?,
            "out" => self.out = PathBuf::from(value),
            "identity" => {
                self.identity = match value {
                    "include" => IdentityMode::Include,
                    "exclude" => IdentityMode::Exclude,
                    _ => return Err(format!("identity must be include|exclude, got `{value}`")),
                }
            }
            "method" => {
                self.method = match value {
                    "lanczos" => GapMethod::Lanczos,
                    "power" => GapMethod::Power,
                    _ => return Err(format!("method must be lanczos|power, got `{value}`")),
                }
            }
            "dense_limit" => self.dense_limit = parse_value(value)?,
            "witness_samples" => self.witness_samples = parse_value(value)?,
            "lp_restarts" => self.lp_restarts = parse_value(value)?,
            "decompose_samples" => self.decompose_samples = parse_value(value)?,
            "mazur_k" => self.mazur_ks = parse_list(value)?,
            "mazur_radius" => self.mazur_radius = parse_value(value)?,
            "mazur_samples" => self.mazur_samples = parse_value(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped.
    pub fn from_text(input: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in input.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(Error::parse(line, col, "expected `key = value`"));
            };
            let key = content[..eq].trim();
            let key_col = content.len() - content.trim_start().len() + 1;
            if key.is_empty() {
                return Err(Error::parse(line, eq + 1, "missing key"));
            }
            let rest = &content[eq + 1..];
            let value = rest.trim();
            let value_col = eq + 2 + (rest.len() - rest.trim_start().len());
            if let Err(msg) = cfg.set(key, value) {
                let col = if msg.starts_with("unknown key") { key_col } else { value_col };
                return Err(Error::parse(line, col, msg));
            }
        }
        Ok(cfg)
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.family.trim().is_empty() {
            return Err(Error::OutOfRange("empty family descriptor".into()));
        }
        if self.budget == 0 || self.k_max == 0 || self.lp_restarts == 0 {
            return Err(Error::OutOfRange("budget, kmax and lp_restarts must be positive".into()));
        }
        if !(self.tol > 0.0 && self.gap_tol > 0.0) {
            return Err(Error::OutOfRange("tolerances must be positive".into()));
        }
        if let Some(&p) = self.p_values.iter().find(|p| !(p.is_finite() && **p > 1.0)) {
            return Err(Error::InvalidExponent(p));
        }
        if self.mazur_ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::OutOfRange("mazur k values must be positive".into()));
        }
        Ok(())
    }
}
