use rand::Rng;
use serde::Serialize;

use super::gap::{norm2, random_mean_zero};
use crate::error::{Error, Result};
use crate::system::FullTranslationSystem;

/// Modulus of convexity `δ : [0, 2] → [0, 1]` of `ℓᵖ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModulusFunction {
    /// Exact closed form for `p ≥ 2`, quadratic lower estimate below.
    Lp(f64),
}

impl ModulusFunction {
    pub fn hilbert() -> Self {
        Self::Lp(2.0)
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        match *self {
            Self::Lp(p) => modulus_lp(p, eps),
        }
    }
}

/// `δ_p(ε) = 1 - (1 - (ε/2)^p)^{1/p}` for `p ≥ 2`; for `1 < p < 2` the lower
/// estimate `(p - 1)ε²/8`.
pub fn modulus_lp(p: f64, eps: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(0.0..=2.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("modulus argument {eps} outside [0, 2]")));
    }
    Ok(if p >= 2.0 {
        1.0 - (1.0 - (eps / 2.0).powf(p)).powf(1.0 / p)
    } else {
        (p - 1.0) * eps * eps / 8.0
    })
}

/// One of the three mutually determined parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Given {
    Lambda(f64),
    S(f64),
    C(f64),
}

/// Bounds derived from a [`Given`]: `lambda` and `s` are upper bounds, `c` a
/// lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterBounds {
    pub lambda: f64,
    pub s: f64,
    pub c: f64,
}

fn s_from_lambda(lambda: f64) -> f64 {
    lambda / (1.0 - lambda)
}

fn c_from_s(s: f64) -> f64 {
    1.0 / (1.0 + s)
}

/// The chain `λ → S ≤ λ/(1-λ) → c ≥ 1/(1+S) → λ ≤ 1 - δ(c)/n`.
pub fn relate_parameters(given: Given, n: usize, modulus: ModulusFunction) -> Result<ParameterBounds> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    let lambda_from_c = |c: f64| -> Result<f64> { Ok(1.0 - modulus.eval(c)? / n as f64) };
    match given {
        Given::Lambda(l) => {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::OutOfRange(format!("lambda {l} outside [0, 1)")));
            }
            let s = s_from_lambda(l);
            Ok(ParameterBounds {
                lambda: l,
                s,
                c: c_from_s(s),
            })
        }
        Given::S(s) => {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::OutOfRange(format!("S {s} must be finite and >= 0")));
            }
            let c = c_from_s(s);
            Ok(ParameterBounds {
                lambda: lambda_from_c(c)?,
                s,
                c,
            })
        }
        Given::C(c) => {
            if !(c > 0.0 && c <= 2.0) {
                return Err(Error::OutOfRange(format!("c {c} outside (0, 2]")));
            }
            let lambda = lambda_from_c(c)?;
            Ok(ParameterBounds {
                lambda,
                s: if lambda < 1.0 { s_from_lambda(lambda) } else { f64::INFINITY },
                c,
            })
        }
    }
}

/// `S` bound: the geometric tail `λ/(1-λ)`, tightened by a convergence table
/// when available (`Σ_{k≤K} min(a_k, λ^k) + min(a_K, λ^K)·λ/(1-λ)`).
pub fn s_bound(lambda: f64, table: Option<&[f64]>) -> f64 {
    if lambda >= 1.0 {
        return f64::INFINITY;
    }
    let geometric = s_from_lambda(lambda);
    let Some(norms) = table.filter(|t| !t.is_empty()) else {
        return geometric;
    };
    let mut pow = 1.0;
    let mut sum = 0.0;
    let mut last = 0.0;
    for &a in norms {
        pow *= lambda;
        last = a.min(pow);
        sum += last;
    }
    geometric.min(sum + last * geometric)
}

pub fn c_bound(s: f64) -> f64 {
    c_from_s(s)
}

/// `min over ξ of max_i ‖A_i ξ - ξ‖₂` over `samples` random unit mean-zero
/// vectors on component `c`. `None` for single-point components.
pub fn sample_witness<R: Rng>(
    system: &FullTranslationSystem,
    c: usize,
    samples: usize,
    rng: &mut R,
) -> Option<f64> {
    let m = system.perm(0, c).len();
    if m <= 1 || samples == 0 {
        return None;
    }
    let mut worst = f64::INFINITY;
    let mut diff = vec![0.0; m];
    for _ in 0..samples {
        let xi = random_mean_zero(m, rng);
        let mut best: f64 = 0.0;
        for i in 0..system.len() {
            let perm = system.perm(i, c);
            // (A_i ξ)(A_i(y)) = ξ(y)
            for (y, &x) in perm.iter().enumerate() {
                diff[x as usize] = xi[y] - xi[x as usize];
            }
            best = best.max(norm2(&diff));
        }
        worst = worst.min(best);
    }
    Some(worst)
}
