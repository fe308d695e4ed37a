use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::markov::{markov, MarkovOperator};
use crate::error::{Error, Result};
use crate::space::{Point, SpaceFamily};
use crate::system::{graphs_entourage, FullTranslationSystem};

/// Singular values below this count toward the null space.
const NULL_TOL: f64 = 1e-9;

/// The system on `X × N`: block copies of every `A_i` followed by the cyclic
/// block shift `(x, i) ↦ (x, i + 1 mod N)`.
pub fn amplified_system(
    space: &SpaceFamily,
    system: &FullTranslationSystem,
    layers: usize,
) -> Result<(SpaceFamily, FullTranslationSystem)> {
    let big = space.amplify(layers)?;
    let sizes = space.sizes();
    let mut perms: Vec<Vec<Vec<Point>>> = system
        .perms()
        .iter()
        .map(|p| {
            p.iter()
                .zip(&sizes)
                .map(|(map, &m)| {
                    (0..layers)
                        .flat_map(|l| map.iter().map(move |&x| (l * m) as Point + x))
                        .collect()
                })
                .collect()
        })
        .collect();
    perms.push(
        sizes
            .iter()
            .map(|&m| {
                (0..layers * m)
                    .map(|z| (((z / m + 1) % layers) * m + z % m) as Point)
                    .collect()
            })
            .collect(),
    );
    let entourage = graphs_entourage(&big, &perms)?;
    let sys = FullTranslationSystem::new(&big, perms, entourage, None)?;
    Ok((big, sys))
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplifiedCheck {
    pub layers: usize,
    /// Null-space dimension of `[I - A_ampl; I - Shift]` per component.
    pub dims: Vec<usize>,
    /// Residual of the diagonal constants `(ξ, …, ξ)` under both operators.
    pub constant_residual: f64,
    pub passed: bool,
}

impl AmplifiedCheck {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }
}

/// Verifies that the invariant vectors of the amplified natural
/// representation are exactly the per-component constants repeated over the
/// layers: one null dimension per component, spanned by the constants.
pub fn amplified_invariants_check(a: &MarkovOperator, layers: usize) -> Result<AmplifiedCheck> {
    if layers < 2 {
        return Err(Error::OutOfRange("amplification check needs N >= 2".into()));
    }
    let (big, sys) = amplified_system(a.space(), a.system(), layers)?;
    let shift_index = sys.len() - 1;
    let amp = markov(Arc::new(big), &sys, a.identity_mode())?;
    let mut dims = Vec::new();
    let mut constant_residual: f64 = 0.0;
    for c in 0..amp.num_components() {
        let m = amp.dim(c);
        let a_dense = amp.csr(c).to_dense();
        let mut stacked = DMatrix::<f64>::zeros(2 * m, m);
        let shift = sys.perm(shift_index, c);
        for x in 0..m {
            for y in 0..m {
                let id = if x == y { 1.0 } else { 0.0 };
                stacked[(x, y)] = id - a_dense[(x, y)];
            }
        }
        for (y, &x) in shift.iter().enumerate() {
            stacked[(m + y, y)] += 1.0;
            stacked[(m + x as usize, y)] -= 1.0;
        }
        let sv = stacked.clone().singular_values();
        dims.push(sv.iter().filter(|&&s| s < NULL_TOL).count());
        let ones = DMatrix::<f64>::from_element(m, 1, 1.0 / (m as f64).sqrt());
        let r = (&stacked * ones).norm();
        constant_residual = constant_residual.max(r);
    }
    let passed = dims.iter().all(|&d| d == 1) && constant_residual <= 1e-12;
    Ok(AmplifiedCheck {
        layers,
        dims,
        constant_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{generate_family, GroupSpec};
    use crate::spectral::markov::IdentityMode;

    fn check(desc: &str, layers: usize) -> AmplifiedCheck {
        let fam = generate_family(&GroupSpec::parse(desc).unwrap(), 1000).unwrap();
        let a = markov(Arc::new(fam.space), &fam.system, IdentityMode::Include).unwrap();
        amplified_invariants_check(&a, layers).unwrap()
    }

    #[test]
    fn four_cycle_two_layers() {
        let r = check("cyclic:4", 2);
        assert_eq!(r.total_dim(), 1);
        assert!(r.passed);
    }

    #[test]
    fn two_components_three_layers() {
        let r = check("cyclic:3,5", 3);
        assert_eq!(r.total_dim(), 2);
        assert!(r.passed);
    }

    #[test]
    fn singleton_two_layers() {
        let r = check("cyclic:1", 2);
        assert_eq!(r.total_dim(), 1);
    }

    #[test]
    fn amplified_system_is_valid() {
        let fam = generate_family(&GroupSpec::parse("cyclic:4").unwrap(), 100).unwrap();
        let (big, sys) = amplified_system(&fam.space, &fam.system, 3).unwrap();
        assert_eq!(big.sizes(), vec![12]);
        assert!(sys.verify().passed());
        assert_eq!(sys.perm(sys.len() - 1, 0)[0], 4);
        assert_eq!(sys.perm(sys.len() - 1, 0)[8], 0);
    }
}
