use std::fmt;

use serde::Serialize;

use super::gap::{restricted_gap_l2, GapOptions, GapResult};
use super::kazhdan::{kazhdan_iterate, KazhdanOptions, KazhdanTable};
use super::lp::{restricted_gap_lp, LpInterval, LpOptions};
use super::markov::MarkovOperator;
use super::params::{c_bound, s_bound, sample_witness};
use super::{component_rng, Stream};
use crate::error::{Error, Result};

/// Agreement required between iterative and dense `λ`.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub gap: GapOptions,
    pub lp: LpOptions,
    pub p_values: Vec<f64>,
    pub kazhdan: Option<KazhdanOptions>,
    /// Unit mean-zero samples per component for the `c` witness check.
    pub witness_samples: usize,
    /// Only components up to this size are sampled.
    pub witness_limit: usize,
    pub threshold: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            gap: GapOptions::default(),
            lp: LpOptions::default(),
            p_values: Vec::new(),
            kazhdan: None,
            witness_samples: 10_000,
            witness_limit: 64,
            threshold: 0.999,
        }
    }
}

/// Everything computed for one component.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentSpectrum {
    pub component: usize,
    pub size: usize,
    pub n: usize,
    pub gap: GapResult,
    pub lp: Vec<LpInterval>,
    pub s_bound: f64,
    pub c_bound: f64,
    /// Smallest `max_i ‖A_i ξ - ξ‖₂` seen over the samples.
    pub witness: Option<f64>,
    pub kazhdan: Option<KazhdanTable>,
    pub no_gap: bool,
}

impl ComponentSpectrum {
    pub fn lambda(&self) -> f64 {
        self.gap.lambda
    }

    pub fn oracle_ok(&self) -> bool {
        self.gap
            .dense_lambda
            .map_or(true, |d| (d - self.gap.lambda).abs() <= ORACLE_TOL)
    }

    /// `S ≤ λ/(1-λ)`, `c ≥ 1/(1+S)`, `c(1+S) ≤ 1` and no witness below `c`.
    pub fn chain_ok(&self) -> bool {
        let l = self.gap.lambda;
        if l >= 1.0 {
            return true;
        }
        let geometric = l / (1.0 - l);
        let s_ok = self.s_bound <= geometric + 1e-12;
        let c_ok = self.c_bound >= 1.0 / (1.0 + self.s_bound) - 1e-12
            && self.c_bound * (1.0 + self.s_bound) <= 1.0 + 1e-12;
        let w_ok = self.witness.map_or(true, |w| w >= self.c_bound - 1e-9);
        s_ok && c_ok && w_ok
    }

    pub fn intervals_ok(&self) -> bool {
        self.lp.iter().all(|iv| iv.lower <= iv.upper)
    }

    /// Comma-free status word for the CSV `flag` column.
    pub fn flag(&self) -> String {
        let mut f: Vec<&str> = Vec::new();
        if self.no_gap {
            f.push("no-gap");
        }
        if !self.gap.converged {
            f.push("no-convergence");
        }
        if self.gap.singular_mode {
            f.push("singular-mode");
        }
        if !self.oracle_ok() {
            f.push("oracle-mismatch");
        }
        if !self.chain_ok() {
            f.push("chain-violation");
        }
        if !self.intervals_ok() {
            f.push("interval-violation");
        }
        if self.kazhdan.as_ref().is_some_and(|t| !t.passed()) {
            f.push("decay-violation");
        }
        if f.is_empty() {
            "ok".into()
        } else {
            f.join("|")
        }
    }

    /// Assertion-grade checks: the `flag` minus the informational words.
    pub fn passed(&self) -> bool {
        self.oracle_ok()
            && self.chain_ok()
            && self.intervals_ok()
            && self.kazhdan.as_ref().map_or(true, KazhdanTable::passed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub components: Vec<ComponentSpectrum>,
    pub min_gap: f64,
    pub max_gap: f64,
    pub verdict: Verdict,
}

impl SpectralReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(ComponentSpectrum::passed)
    }
}

/// Uniformity of `1 - λ` across the family for the natural representation.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub uniform: bool,
    pub threshold: f64,
    pub max_lambda: f64,
    /// Component attaining `max_lambda`.
    pub witness_component: usize,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (natural-representation evidence): max lambda {:.12} at component {} vs threshold {}",
            if self.uniform { "UNIFORM" } else { "NON-UNIFORM" },
            self.max_lambda,
            self.witness_component,
            self.threshold
        )
    }
}

/// UNIFORM iff every component has `λ ≤ threshold`.
pub fn uniform_gap_verdict(lambdas: &[f64], threshold: f64) -> Result<Verdict> {
    let (witness_component, max_lambda) = lambdas
        .iter()
        .copied()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, l)| match acc {
            Some((_, best)) if best >= l => acc,
            _ => Some((i, l)),
        })
        .ok_or_else(|| Error::OutOfRange("verdict needs at least one component".into()))?;
    Ok(Verdict {
        uniform: max_lambda <= threshold,
        threshold,
        max_lambda,
        witness_component,
    })
}

/// λ, ℓᵖ intervals, parameter chain, witnesses and optionally the Kazhdan
/// tables for every component of `a`.
pub fn spectral_report(a: &MarkovOperator, opts: &SpectralOptions) -> Result<SpectralReport> {
    let gaps = restricted_gap_l2(a, &opts.gap);
    let mut lp_by_comp: Vec<Vec<LpInterval>> = vec![Vec::new(); gaps.len()];
    for &p in &opts.p_values {
        for iv in restricted_gap_lp(a, &gaps, p, &opts.lp)? {
            lp_by_comp[iv.component].push(iv);
        }
    }
    let tables: Vec<Option<Result<KazhdanTable>>> = match &opts.kazhdan {
        Some(k) => kazhdan_iterate(a, &gaps, k).into_iter().map(Some).collect(),
        None => gaps.iter().map(|_| None).collect(),
    };
    let system = a.system();
    let mut components = Vec::with_capacity(gaps.len());
    for ((gap, lp), table) in gaps.into_iter().zip(lp_by_comp).zip(tables) {
        let c = gap.component;
        let (kazhdan, no_gap) = match table {
            Some(Ok(t)) => (Some(t), false),
            Some(Err(Error::NoGap { .. })) => (None, true),
            Some(Err(e)) => return Err(e),
            None => (None, gap.lambda >= super::kazhdan::NO_GAP),
        };
        let s = s_bound(gap.lambda, kazhdan.as_ref().map(|t| t.norms.as_slice()));
        let cb = c_bound(s);
        let witness = (gap.size <= opts.witness_limit)
            .then(|| {
                let mut rng = component_rng(opts.gap.seed, Stream::Witness, c);
                sample_witness(system, c, opts.witness_samples, &mut rng)
            })
            .flatten();
        components.push(ComponentSpectrum {
            component: c,
            size: gap.size,
            n: a.n(),
            gap,
            lp,
            s_bound: s,
            c_bound: cb,
            witness,
            kazhdan,
            no_gap,
        });
    }
    let lambdas: Vec<f64> = components.iter().map(ComponentSpectrum::lambda).collect();
    let verdict = uniform_gap_verdict(&lambdas, opts.threshold)?;
    let gaps_iter = lambdas.iter().map(|l| 1.0 - l);
    let min_gap = gaps_iter.clone().fold(f64::INFINITY, f64::min);
    let max_gap = gaps_iter.fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        components,
        min_gap,
        max_gap,
        verdict,
    })
}
