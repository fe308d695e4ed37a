//! Structured run reports, their determinism hash and CSV helpers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA: &str = "kazhdan-report/1";

/// Excluded from the determinism hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub command: String,
    pub config: Value,
    pub sections: BTreeMap<String, Value>,
    /// False iff an assertion-grade check failed.
    pub passed: bool,
    pub determinism_hash: String,
    pub provenance: Provenance,
}

impl ReportDocument {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            schema: SCHEMA.into(),
            command: command.into(),
            config: to_value(config)?,
            sections: BTreeMap::new(),
            passed: true,
            determinism_hash: String::new(),
            provenance: Provenance {
                tool_version: env!("CARGO_PKG_VERSION").into(),
                seed,
                timestamp_unix,
            },
        })
    }

    /// Adds a section; `passed` is AND-ed into the document verdict.
    pub fn add_section(&mut self, name: &str, value: &impl Serialize, passed: bool) -> Result<()> {
        self.sections.insert(name.into(), to_value(value)?);
        self.passed &= passed;
        self.seal();
        Ok(())
    }

    /// Recomputes the determinism hash.
    pub fn seal(&mut self) {
        self.determinism_hash = determinism_hash(&self.config, &self.sections, self.passed);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }

    pub fn from_json(input: &str) -> Result<Self> {
        serde_json::from_str(input).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
    }

    /// Union of the sections of several reports, keyed `<command>.<section>`.
    pub fn merge(docs: &[ReportDocument]) -> Result<Self> {
        let seed = docs.first().map_or(0, |d| d.provenance.seed);
        let configs: Vec<&Value> = docs.iter().map(|d| &d.config).collect();
        let mut out = Self::new("report", &configs, seed)?;
        for d in docs {
            for (name, v) in &d.sections {
                out.sections.insert(format!("{}.{}", d.command, name), v.clone());
            }
            out.passed &= d.passed;
        }
        out.seal();
        Ok(out)
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::OutOfRange(format!("unserializable report value: {e}")))
}

fn feed(h: &mut Sha256, path: &str, v: &Value) {
    match v {
        Value::Number(n) => {
            h.update(path.as_bytes());
            if let Some(u) = n.as_u64() {
                h.update(b"u");
                h.update(u.to_le_bytes());
            } else if let Some(i) = n.as_i64() {
                h.update(b"i");
                h.update(i.to_le_bytes());
            } else {
                h.update(b"f");
                h.update(n.as_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes());
            }
        }
        Value::Bool(b) => {
            h.update(path.as_bytes());
            h.update(if *b { b"T" } else { b"F" });
        }
        Value::Null => {
            h.update(path.as_bytes());
            h.update(b"n");
        }
        Value::String(_) => {}
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                feed(h, &format!("{path}[{i}]"), x);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                feed(h, &format!("{path}.{k}"), x);
            }
        }
    }
}

/// SHA-256 over the binary value of every numeric (and boolean) leaf,
/// prefixed by its path. Strings and the provenance block do not enter.
pub fn determinism_hash(config: &Value, sections: &BTreeMap<String, Value>, passed: bool) -> String {
    let mut h = Sha256::new();
    feed(&mut h, "config", config);
    for (name, v) in sections {
        feed(&mut h, &format!("sections.{name}"), v);
    }
    feed(&mut h, "passed", &Value::Bool(passed));
    hex::encode(h.finalize())
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        trim(&format!("{:.*}", (11 - exp) as usize, x))
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}
