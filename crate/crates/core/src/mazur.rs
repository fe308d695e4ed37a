//! Mazur maps between ℓᵖ spheres, signed-permutation isometries and the
//! almost-invariance experiments built on them.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::roe::{PartialTranslation, C64};
use crate::space::{Point, SpaceFamily};
use crate::system::{is_permutation, FullTranslationSystem};

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `z / |z|`, with `sign(0) = 0`.
pub fn sign(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        z / n
    }
}

pub fn norm_p(f: &[C64], p: f64) -> f64 {
    let scale = f.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * f.iter().map(|z| (z.norm() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `M_{p,q}(f) = sign(f)·|f|^{p/q}` pointwise.
pub fn mazur_map(f: &[C64], p: f64, q: f64) -> Result<Vec<C64>> {
    check_exponent(p)?;
    check_exponent(q)?;
    if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::OutOfRange("non-finite vector entry".into()));
    }
    if p == q {
        return Ok(f.to_vec());
    }
    let e = p / q;
    Ok(f.iter().map(|&z| sign(z) * z.norm().powf(e)).collect())
}

fn random_vector<R: Rng>(m: usize, rng: &mut R) -> Vec<C64> {
    (0..m)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn normalize(f: &mut [C64], p: f64) {
    let n = norm_p(f, p);
    if n > 0.0 {
        f.iter_mut().for_each(|z| *z /= n);
    }
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `(Vf)(x) = h(x)·f(σ⁻¹(x))`, i.e. `(Vf)(σ(y)) = h(σ(y))·f(y)`, per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutationIsometry {
    sigma: Vec<Vec<Point>>,
    h: Vec<Vec<C64>>,
}

impl SignedPermutationIsometry {
    pub fn new(sigma: Vec<Vec<Point>>, h: Vec<Vec<C64>>) -> Result<Self> {
        if sigma.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: sigma.len(),
                got: h.len(),
            });
        }
        for (s, hv) in sigma.iter().zip(&h) {
            if !is_permutation(s) {
                return Err(Error::InvalidSystem("sigma is not a permutation".into()));
            }
            if s.len() != hv.len() {
                return Err(Error::DimensionMismatch {
                    expected: s.len(),
                    got: hv.len(),
                });
            }
            if hv.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
                return Err(Error::OutOfRange("h must be unimodular".into()));
            }
        }
        Ok(Self { sigma, h })
    }

    pub fn identity(space: &SpaceFamily) -> Self {
        let sizes = space.sizes();
        Self {
            sigma: sizes.iter().map(|&m| (0..m as Point).collect()).collect(),
            h: sizes.iter().map(|&m| vec![C64::new(1.0, 0.0); m]).collect(),
        }
    }

    /// The full translation `A_i` with `h ≡ 1`.
    pub fn from_translation(system: &FullTranslationSystem, i: usize) -> Self {
        let sigma: Vec<Vec<Point>> = (0..system.num_components())
            .map(|c| system.perm(i, c).to_vec())
            .collect();
        let h = sigma.iter().map(|s| vec![C64::new(1.0, 0.0); s.len()]).collect();
        Self { sigma, h }
    }

    /// Same permutation, random unimodular multipliers.
    pub fn with_random_phases<R: Rng>(mut self, rng: &mut R) -> Self {
        for hv in &mut self.h {
            for z in hv.iter_mut() {
                *z = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            }
        }
        self
    }

    pub fn num_components(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, c: usize) -> &[Point] {
        &self.sigma[c]
    }

    pub fn h(&self, c: usize) -> &[C64] {
        &self.h[c]
    }

    pub fn apply(&self, c: usize, f: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for (y, &x) in self.sigma[c].iter().enumerate() {
            out[x as usize] = self.h[c][x as usize] * f[y];
        }
        out
    }
}

/// Outcome of conjugating an isometry by Mazur maps.
#[derive(Debug, Clone)]
pub struct ConjugationCertificate {
    /// Recovered from the conjugated map by probing.
    pub isometry: SignedPermutationIsometry,
    /// `max ‖W(αξ+βη) - αWξ - βWη‖₂` over the samples.
    pub linearity_defect: f64,
    /// `max |Wξ - Vξ|` over the samples.
    pub action_defect: f64,
    /// Recovered `σ` equal to the input and `h` within 1e-12.
    pub same_operator: bool,
    pub samples: usize,
}

impl ConjugationCertificate {
    pub fn passed(&self, tol: f64) -> bool {
        self.same_operator && self.linearity_defect < tol && self.action_defect < tol
    }
}

/// `W = M_{p,2} ∘ V ∘ M_{2,p}` evaluated pointwise on component `c`.
fn conjugated(v: &SignedPermutationIsometry, c: usize, p: f64, xi: &[C64]) -> Vec<C64> {
    let inner = mazur_map(xi, 2.0, p).expect("checked exponent");
    mazur_map(&v.apply(c, &inner), p, 2.0).expect("checked exponent")
}

pub fn conjugate_isometry<R: Rng>(
    v: &SignedPermutationIsometry,
    p: f64,
    samples: usize,
    rng: &mut R,
) -> Result<ConjugationCertificate> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    // Probe with ξ(y) = (y + 1)/m: W maps it to h·ξ∘σ⁻¹, and the distinct
    // moduli identify σ pointwise.
    let mut sigma = Vec::new();
    let mut h = Vec::new();
    for c in 0..v.num_components() {
        let m = v.sigma[c].len();
        let probe: Vec<C64> = (0..m).map(|y| C64::new((y + 1) as f64 / m as f64, 0.0)).collect();
        let w = conjugated(v, c, p, &probe);
        let mut s = vec![Point::MAX; m];
        let mut hv = vec![C64::new(0.0, 0.0); m];
        for (x, z) in w.iter().enumerate() {
            let y = (z.norm() * m as f64 - 1.0).round();
            if !(0.0..m as f64).contains(&y) || s[y as usize] != Point::MAX {
                return Err(Error::InvalidSystem("conjugated map is not a signed permutation".into()));
            }
            s[y as usize] = x as Point;
            hv[x] = sign(*z);
        }
        sigma.push(s);
        h.push(hv);
    }
    let same_operator = sigma == v.sigma
        && h.iter()
            .flatten()
            .zip(v.h.iter().flatten())
            .all(|(a, b)| (a - b).norm() <= 1e-12);
    let isometry = SignedPermutationIsometry { sigma, h };

    let mut linearity_defect: f64 = 0.0;
    let mut action_defect: f64 = 0.0;
    let comps: Vec<usize> = (0..v.num_components()).filter(|&c| !v.sigma[c].is_empty()).collect();
    for s in 0..samples {
        if comps.is_empty() {
            break;
        }
        let c = comps[s % comps.len()];
        let m = v.sigma[c].len();
        let xi = random_vector(m, rng);
        let eta = random_vector(m, rng);
        let alpha = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let beta = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let comb: Vec<C64> = xi.iter().zip(&eta).map(|(a, b)| alpha * a + beta * b).collect();
        let w_comb = conjugated(v, c, p, &comb);
        let w_xi = conjugated(v, c, p, &xi);
        let w_eta = conjugated(v, c, p, &eta);
        let defect: f64 = w_comb
            .iter()
            .zip(&w_xi)
            .zip(&w_eta)
            .map(|((wc, wx), we)| (wc - alpha * wx - beta * we).norm_sqr())
            .sum::<f64>()
            .sqrt();
        linearity_defect = linearity_defect.max(defect);
        action_defect = action_defect.max(max_diff(&w_xi, &v.apply(c, &xi)));
    }
    Ok(ConjugationCertificate {
        isometry,
        linearity_defect,
        action_defect,
        same_operator,
        samples,
    })
}

/// `f_k(x) = 1/(k + d(x, x₀))` with one base point per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayVector {
    pub base: Vec<Point>,
    pub k: f64,
    pub values: Vec<Vec<f64>>,
}

impl DecayVector {
    pub fn new(space: &SpaceFamily, base: &[Point], k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::OutOfRange(format!("decay parameter {k} must be positive")));
        }
        if base.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: base.len(),
            });
        }
        let mut values = Vec::with_capacity(space.len());
        for (c, &x0) in base.iter().enumerate() {
            let comp = space.component(c);
            if x0 as usize >= comp.size() {
                return Err(Error::InvalidPoint {
                    component: c,
                    point: x0 as u64,
                    size: comp.size(),
                });
            }
            values.push(comp.distance_row(x0).iter().map(|&d| 1.0 / (k + d as f64)).collect());
        }
        Ok(Self {
            base: base.to_vec(),
            k,
            values,
        })
    }

    /// `sup_x |(Vf)(x) - (Φ(V)f)(x)| = max over pairs (x, y) of |f(y) - f(x)|`.
    pub fn translation_defect(&self, v: &PartialTranslation) -> f64 {
        v.all_pairs()
            .map(|(c, x, y)| (self.values[c][y as usize] - self.values[c][x as usize]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct C0Record {
    pub k: f64,
    pub radius: u32,
    /// Largest defect over the tested translations.
    pub max_defect: f64,
    /// `R / k²`.
    pub bound: f64,
    /// `D / (2k(k + D))` per component, `D` its diameter.
    pub quotient_lower: Vec<f64>,
    pub exhaustive: bool,
    pub translations: usize,
    pub passed: bool,
}

/// Exhaustive single-pair enumeration of `Δ_R` below this many pairs.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;

/// Measures how far `f_k` is from invariant under partial translations with
/// support in `Δ_R`. Each pair contributes independently to the sup, so the
/// single-pair translations of `Δ_R` realise the maximum; `samples` further
/// random multi-pair translations are checked as well.
pub fn almost_invariant_c0<R: Rng>(
    space: &SpaceFamily,
    base: &[Point],
    k: f64,
    radius: u32,
    samples: usize,
    rng: &mut R,
) -> Result<C0Record> {
    let f = DecayVector::new(space, base, k)?;
    let delta = space.r_diagonal(radius);
    let exhaustive = delta.pair_count() <= EXHAUSTIVE_LIMIT;
    let mut max_defect: f64 = 0.0;
    let mut translations = 0;
    if exhaustive {
        for (c, x, y) in delta.pairs() {
            let v = PartialTranslation::new(space, [(c, x, y)])?;
            max_defect = max_defect.max(f.translation_defect(&v));
            translations += 1;
        }
    }
    for _ in 0..samples {
        let v = crate::decomp::random_partial_translation(space, &delta, rng);
        max_defect = max_defect.max(f.translation_defect(&v));
        translations += 1;
    }
    let bound = radius as f64 / (k * k);
    let quotient_lower = space
        .components()
        .iter()
        .map(|comp| {
            let d = comp.diameter() as f64;
            d / (2.0 * k * (k + d))
        })
        .collect();
    Ok(C0Record {
        k,
        radius,
        max_defect,
        bound,
        quotient_lower,
        exhaustive,
        translations,
        passed: max_defect <= bound + 1e-12,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `(‖Vξ - ξ‖_p, ‖M_{p,2}(Vξ) - M_{p,2}(ξ)‖₂)` after normalising `ξ` in ℓᵖ.
pub fn transfer_defect(xi: &[C64], v: &SignedPermutationIsometry, c: usize, p: f64) -> Result<(f64, f64)> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let mut x = xi.to_vec();
    normalize(&mut x, p);
    let vx = v.apply(c, &x);
    let dp: Vec<C64> = vx.iter().zip(&x).map(|(a, b)| a - b).collect();
    let mx = mazur_map(&x, p, 2.0)?;
    let mvx = mazur_map(&vx, p, 2.0)?;
    let d2: Vec<C64> = mvx.iter().zip(&mx).map(|(a, b)| a - b).collect();
    Ok((norm_p(&dp, p), norm_p(&d2, 2.0)))
}

/// Max pointwise round-trip error `|M_{q,p}(M_{p,q} f) - f|` over random
/// unit vectors of dimension `m`.
pub fn roundtrip_defect<R: Rng>(p: f64, q: f64, m: usize, samples: usize, rng: &mut R) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut f = random_vector(m, rng);
        normalize(&mut f, p);
        let back = mazur_map(&mazur_map(&f, p, q)?, q, p)?;
        worst = worst.max(max_diff(&back, &f));
    }
    Ok(worst)
}

/// Max `|‖M_{p,2}ξ‖₂ - 1|` over random unit vectors of ℓᵖ.
pub fn sphere_defect<R: Rng>(p: f64, m: usize, samples: usize, rng: &mut R) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut f = random_vector(m, rng);
        normalize(&mut f, p);
        worst = worst.max((norm_p(&mazur_map(&f, p, 2.0)?, 2.0) - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn path(n: usize) -> SpaceFamily {
        SpaceFamily::from_edge_lists(&[(n, (0..n as Point - 1).map(|i| (i, i + 1)).collect())]).unwrap()
    }

    #[test]
    fn mazur_examples() {
        let f = vec![c(0.3), C64::new(-0.2, 0.7), c(0.0)];
        assert_eq!(mazur_map(&f, 3.0, 3.0).unwrap(), f);
        for (p, q) in [(1.5, 4.0), (3.0, 2.0)] {
            let e = vec![c(0.0), c(1.0)];
            assert_eq!(mazur_map(&e, p, q).unwrap(), e);
        }
        let p: f64 = 3.0;
        let f = vec![c(2f64.powf(-1.0 / p)); 2];
        let g = mazur_map(&f, p, 2.0).unwrap();
        for z in g {
            assert!((z.re - 2f64.powf(-0.5)).abs() < 1e-15);
        }
        assert!(matches!(mazur_map(&[c(1.0)], 0.5, 2.0), Err(Error::InvalidExponent(_))));
        assert_eq!(sign(c(0.0)), c(0.0));
    }

    #[test]
    fn conjugation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let space = path(4);
        let id = SignedPermutationIsometry::identity(&space);
        let cert = conjugate_isometry(&id, 2.5, 100, &mut rng).unwrap();
        // M_{p,2}∘M_{2,p} is the identity up to powf rounding
        assert!(cert.passed(1e-12), "{cert:?}");
        assert_eq!(cert.isometry, id);

        let shift = SignedPermutationIsometry::new(vec![vec![1, 2, 3, 0]], vec![vec![c(1.0); 4]]).unwrap();
        let cert = conjugate_isometry(&shift, 3.0, 100, &mut rng).unwrap();
        assert!(cert.passed(1e-12), "{cert:?}");
        assert_eq!(cert.isometry, shift);

        let flip = SignedPermutationIsometry::new(
            vec![vec![0, 1, 2, 3]],
            vec![vec![c(1.0), c(-1.0), c(1.0), c(1.0)]],
        )
        .unwrap();
        let cert = conjugate_isometry(&flip, 1.5, 100, &mut rng).unwrap();
        assert!(cert.passed(1e-12), "{cert:?}");
    }

    #[test]
    fn decay_vector_and_c0() {
        let space = path(11);
        let f = DecayVector::new(&space, &[0], 5.0).unwrap();
        assert_eq!(f.values[0][0], 0.2);
        assert!(f.values[0].iter().all(|&v| v > 0.0 && v <= 0.2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r0 = almost_invariant_c0(&space, &[0], 5.0, 0, 20, &mut rng).unwrap();
        assert_eq!(r0.max_defect, 0.0);
        let r1 = almost_invariant_c0(&space, &[0], 5.0, 1, 50, &mut rng).unwrap();
        assert!(r1.exhaustive && r1.passed);
        assert!(r1.max_defect <= 1.0 / 25.0);
        assert!((r1.max_defect - (0.2 - 1.0 / 6.0)).abs() < 1e-15);
        assert!((r1.quotient_lower[0] - 10.0 / (2.0 * 5.0 * 15.0)).abs() < 1e-15);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(-2)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn transfer_trivial_cases() {
        let space = path(3);
        let id = SignedPermutationIsometry::identity(&space);
        let xi = vec![c(1.0), c(-2.0), c(0.5)];
        assert_eq!(transfer_defect(&xi, &id, 0, 3.0).unwrap(), (0.0, 0.0));
        let swap = SignedPermutationIsometry::new(vec![vec![2, 1, 0]], vec![vec![c(1.0); 3]]).unwrap();
        let sym = vec![c(1.0), c(4.0), c(1.0)];
        assert_eq!(transfer_defect(&sym, &swap, 0, 1.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn roundtrip_and_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in [1.5, 2.0, 3.0, 4.0] {
            for q in [1.5, 2.0, 3.0, 4.0] {
                assert!(roundtrip_defect(p, q, 16, 50, &mut rng).unwrap() < 1e-12);
            }
            assert!(sphere_defect(p, 16, 50, &mut rng).unwrap() < 1e-12);
        }
    }
}
