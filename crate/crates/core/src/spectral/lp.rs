use rayon::prelude::*;
use serde::Serialize;

use super::gap::GapResult;
use super::markov::MarkovOperator;
use super::{component_rng, Stream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 200,
            seed: 0,
        }
    }
}

/// Certified bracket for `‖A - P‖_p` on one component.
#[derive(Debug, Clone, Serialize)]
pub struct LpInterval {
    pub component: usize,
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    /// Max column absolute sum of `A - P`.
    pub norm1: f64,
    /// Max row absolute sum of `A - P`.
    pub norm_inf: f64,
    pub iterations: usize,
}

impl LpInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

pub(crate) fn norm_p(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `ξ ↦ sign(ξ)|ξ|^{p-1} / ‖ξ‖_p^{p-1}`, the unit norming functional in `ℓ^{p'}`.
fn duality_map(x: &[f64], p: f64) -> Vec<f64> {
    let n = norm_p(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter()
        .map(|v| v.signum() * (v.abs() / n).powf(p - 1.0))
        .collect()
}

/// Interpolation upper bound for `1 < q ≤ 2` from the `ℓ¹` norm `a`, the
/// `ℓ^∞` norm `b` and the `ℓ²` norm `l2`.
fn upper_le2(q: f64, a: f64, b: f64, l2: f64) -> f64 {
    let riesz = a.powf(1.0 / q) * b.powf(1.0 - 1.0 / q);
    let via_l2 = a.powf(2.0 / q - 1.0) * l2.powf(2.0 - 2.0 / q);
    riesz.min(via_l2)
}

/// Representative `≤ 2` of the conjugate pair `{p, p'}`, identical in every
/// bit for `p` and `conjugate(p)`. Float `x ↦ x/(x-1)` need not round-trip,
/// but `conjugate(p)` lies on the orbit of `p`, so both reach the same cycle;
/// its minimum is the representative.
fn canonical_exponent(p: f64) -> f64 {
    let mut seen = vec![p];
    let mut x = p;
    for _ in 0..64 {
        x = conjugate(x);
        if let Some(i) = seen.iter().position(|&s| s.to_bits() == x.to_bits()) {
            return seen[i..].iter().copied().fold(f64::INFINITY, f64::min);
        }
        seen.push(x);
    }
    if p <= 2.0 {
        p
    } else {
        conjugate(p)
    }
}

/// Upper bound for `‖M‖_p`. For `p > 2` the bound of the adjoint at `p'` is
/// used (`‖M‖_p = ‖Mᵀ‖_{p'}`, which swaps the two exact norms), so the
/// formula is the same expression for conjugate exponents.
pub fn interpolation_upper(p: f64, norm1: f64, norm_inf: f64, l2: f64) -> f64 {
    let r = canonical_exponent(p);
    if p <= 2.0 {
        upper_le2(r, norm1, norm_inf, l2)
    } else {
        upper_le2(r, norm_inf, norm1, l2)
    }
}

/// Exact `(‖M‖₁, ‖M‖_∞)` of the dense `M = A - P`, summed in index order so
/// the two agree bitwise when `A` is symmetric.
pub fn exact_norms(a: &MarkovOperator, c: usize) -> (f64, f64) {
    let m = a.dense_m(c);
    let k = m.nrows();
    let mut n1: f64 = 0.0;
    let mut ninf: f64 = 0.0;
    for i in 0..k {
        let mut col = 0.0;
        let mut row = 0.0;
        for j in 0..k {
            col += m[(j, i)].abs();
            row += m[(i, j)].abs();
        }
        n1 = n1.max(col);
        ninf = ninf.max(row);
    }
    (n1, ninf)
}

/// Boyd-type ascent from `x`; returns the best attained `‖Mx‖_p / ‖x‖_p`.
fn ascent(a: &MarkovOperator, c: usize, p: f64, mut x: Vec<f64>, max_iter: usize) -> (f64, usize) {
    let q = conjugate(p);
    let m = x.len();
    let mut y = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut best: f64 = 0.0;
    let mut iters = 0;
    for _ in 0..max_iter {
        iters += 1;
        let nx = norm_p(&x, p);
        if nx == 0.0 {
            break;
        }
        a.apply_m(c, &x, &mut y);
        let est = norm_p(&y, p) / nx;
        best = best.max(est);
        if est == 0.0 {
            break;
        }
        let dy = duality_map(&y, p);
        a.apply_mt(c, &dy, &mut z);
        let zx: f64 = z.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() / nx;
        if norm_p(&z, q) <= zx * (1.0 + 1e-13) {
            break;
        }
        x = duality_map(&z, q);
    }
    (best, iters)
}

fn lp_component(a: &MarkovOperator, gap: &GapResult, p: f64, opts: &LpOptions) -> LpInterval {
    let c = gap.component;
    let m = a.dim(c);
    if m <= 1 {
        return LpInterval {
            component: c,
            p,
            lower: 0.0,
            upper: 0.0,
            norm1: 0.0,
            norm_inf: 0.0,
            iterations: 0,
        };
    }
    let (norm1, norm_inf) = exact_norms(a, c);
    let upper = interpolation_upper(p, norm1, norm_inf, gap.lambda_upper());

    let mut rng = component_rng(opts.seed, Stream::Lp, c);
    let mut lower: f64 = 0.0;
    let mut iterations = 0;
    let restarts = opts.restarts.max(1);
    for r in 0..restarts {
        let start = if r == 0 && gap.top_vector.len() == m && gap.top_vector.iter().any(|v| *v != 0.0) {
            gap.top_vector.clone()
        } else {
            super::gap::random_mean_zero(m, &mut rng)
        };
        let (v, it) = ascent(a, c, p, start, opts.max_iter);
        lower = lower.max(v);
        iterations += it;
    }
    // attained values can exceed an exact upper bound only by rounding
    if lower > upper && lower - upper <= 1e-12 * upper.max(1.0) {
        lower = upper;
    }
    LpInterval {
        component: c,
        p,
        lower,
        upper,
        norm1,
        norm_inf,
        iterations,
    }
}

/// Interval `[lower, upper] ∋ ‖A - P‖_p` per component: ascent lower bound
/// over seeded restarts (the first warm-started from the ℓ² top vector),
/// interpolation upper bound.
pub fn restricted_gap_lp(
    a: &MarkovOperator,
    gaps: &[GapResult],
    p: f64,
    opts: &LpOptions,
) -> Result<Vec<LpInterval>> {
    check_exponent(p)?;
    if gaps.len() != a.num_components() {
        return Err(Error::DimensionMismatch {
            expected: a.num_components(),
            got: gaps.len(),
        });
    }
    Ok(gaps.par_iter().map(|g| lp_component(a, g, p, opts)).collect())
}
