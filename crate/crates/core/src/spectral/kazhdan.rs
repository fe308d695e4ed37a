use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::gap::{norm2, GapResult};
use super::markov::MarkovOperator;
use crate::error::{Error, Result};

/// `λ` at or above this counts as no gap.
pub const NO_GAP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct KazhdanOptions {
    pub k_max: usize,
    pub tol: f64,
    /// Components up to this size materialise `(A - P)^k` densely.
    pub dense_limit: usize,
}

impl Default for KazhdanOptions {
    fn default() -> Self {
        Self {
            k_max: 200,
            tol: 1e-12,
            dense_limit: 64,
        }
    }
}

/// `a_k = ‖A^k - P‖₂` for `k = 1..=K`.
#[derive(Debug, Clone, Serialize)]
pub struct KazhdanTable {
    pub component: usize,
    pub lambda: f64,
    pub norms: Vec<f64>,
    /// First `k` with `a_k ≤ tol`, if reached before `k_max`.
    pub converged_at: Option<usize>,
    /// Geometric-mean ratio `(a_K / a_1)^{1/(K-1)}`.
    pub rate: f64,
    pub dense: bool,
    /// `a_k ≤ λ^k (1 + 1e-9)` for every row.
    pub bound_ok: bool,
    /// `a_{k+1} ≤ a_k (1 + 1e-12)` for every row.
    pub monotone: bool,
    /// Dense path only: `|(A^k - P)_{xy}| ≤ λ^k` for every entry and row.
    pub entrywise_ok: Option<bool>,
}

impl KazhdanTable {
    pub fn passed(&self) -> bool {
        self.bound_ok && self.monotone && self.entrywise_ok.unwrap_or(true)
    }

    fn finish(mut self, tol: f64) -> Self {
        let lam = self.lambda;
        let mut pow = 1.0;
        let mut ok = true;
        for &a in &self.norms {
            pow *= lam;
            ok &= a <= pow * (1.0 + 1e-9);
        }
        self.bound_ok = ok;
        self.monotone = self.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        self.converged_at = self.norms.iter().position(|&a| a <= tol).map(|i| i + 1);
        let k = self.norms.len();
        self.rate = match k {
            0 => 0.0,
            1 => self.norms[0],
            _ if self.norms[0] > 0.0 && self.norms[k - 1] > 0.0 => {
                (self.norms[k - 1] / self.norms[0]).powf(1.0 / (k - 1) as f64)
            }
            _ => 0.0,
        };
        self
    }
}

fn largest_singular(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().fold(0.0f64, |a, v| a.max(*v))
}

/// `M^k` formed by repeated multiplication with `M = A - P` (not as
/// `A^k - P`, which would cancel badly).
fn dense_table(a: &MarkovOperator, c: usize, lambda: f64, opts: &KazhdanOptions) -> (Vec<f64>, bool) {
    let m = a.dense_m(c);
    let mut mk = m.clone();
    let mut norms = Vec::new();
    let mut entry_ok = true;
    let mut pow = 1.0;
    for k in 1..=opts.k_max {
        if k > 1 {
            mk = &mk * &m;
        }
        pow *= lambda;
        let n = largest_singular(&mk);
        let worst = mk.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        entry_ok &= worst <= pow;
        norms.push(n);
        if n <= opts.tol {
            break;
        }
    }
    (norms, entry_ok)
}

/// Implicit path. Symmetric `M`: `a_k ≈ ‖M^k u‖` from the top vector `u`
/// (exact up to the eigenvector error). Otherwise a few power steps on
/// `(M^k)ᵀM^k` per `k`, warm-started from the previous vector.
fn implicit_table(a: &MarkovOperator, c: usize, top: &[f64], opts: &KazhdanOptions) -> Vec<f64> {
    let m = a.dim(c);
    let mut norms = Vec::new();
    let mut u: Vec<f64> = top.to_vec();
    let mut w = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    if a.is_symmetric() {
        for _ in 1..=opts.k_max {
            a.apply_m(c, &u, &mut w);
            std::mem::swap(&mut u, &mut w);
            let n = norm2(&u);
            norms.push(n);
            if n <= opts.tol {
                break;
            }
        }
        return norms;
    }
    for k in 1..=opts.k_max {
        let mut best: f64 = 0.0;
        for _ in 0..30 {
            w.copy_from_slice(&u);
            for _ in 0..k {
                a.apply_m(c, &w, &mut tmp);
                std::mem::swap(&mut w, &mut tmp);
            }
            let s = norm2(&w);
            let improved = s > best * (1.0 + 1e-12);
            best = best.max(s);
            if s == 0.0 || !improved {
                break;
            }
            for _ in 0..k {
                a.apply_mt(c, &w, &mut tmp);
                std::mem::swap(&mut w, &mut tmp);
            }
            let n = norm2(&w);
            if n == 0.0 {
                break;
            }
            u.iter_mut().zip(&w).for_each(|(ui, wi)| *ui = wi / n);
        }
        norms.push(best);
        if best <= opts.tol {
            break;
        }
    }
    norms
}

/// Convergence table of `A^k → P` on one component.
pub fn kazhdan_component(a: &MarkovOperator, gap: &GapResult, opts: &KazhdanOptions) -> Result<KazhdanTable> {
    let c = gap.component;
    if gap.lambda >= NO_GAP {
        return Err(Error::NoGap {
            component: c,
            lambda: gap.lambda,
        });
    }
    let m = a.dim(c);
    let dense = m <= opts.dense_limit;
    let (norms, entrywise_ok) = if m <= 1 {
        (vec![0.0], Some(true))
    } else if dense {
        let (n, ok) = dense_table(a, c, gap.lambda, opts);
        (n, Some(ok))
    } else {
        (implicit_table(a, c, &gap.top_vector, opts), None)
    };
    Ok(KazhdanTable {
        component: c,
        lambda: gap.lambda,
        norms,
        converged_at: None,
        rate: 0.0,
        dense,
        bound_ok: false,
        monotone: false,
        entrywise_ok,
    }
    .finish(opts.tol))
}

/// Per-component tables; components without a gap yield `NoGap`.
pub fn kazhdan_iterate(a: &MarkovOperator, gaps: &[GapResult], opts: &KazhdanOptions) -> Vec<Result<KazhdanTable>> {
    gaps.par_iter().map(|g| kazhdan_component(a, g, opts)).collect()
}
