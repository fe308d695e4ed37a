//! Oracles shared by the integration targets.

use std::sync::Arc;

use kazhdan_core::group::{generate_family, GroupSpec};
use kazhdan_core::spectral::{markov, IdentityMode, MarkovOperator};
use kazhdan_core::system::graphs_entourage;
use kazhdan_core::{FullTranslationSystem, SpaceFamily};
use nalgebra::{DMatrix, DVector};

pub fn cayley_markov(desc: &str) -> MarkovOperator {
    let fam = generate_family(&GroupSpec::parse(desc).unwrap(), 1_000_000).unwrap();
    markov(Arc::new(fam.space), &fam.system, IdentityMode::Include).unwrap()
}

/// Dense grid search for `max ‖Mx‖_p / ‖x‖_p` over real `x`, with `max|x_i| = 1`,
/// followed by coordinate pattern search around the best grid points.
pub fn grid_norm(m: &DMatrix<f64>, p: f64) -> f64 {
    let k = m.nrows();
    let norm = |x: &[f64]| x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let ratio = |x: &[f64]| {
        let y = m * DVector::from_column_slice(x);
        norm(y.as_slice()) / norm(x)
    };
    let steps = 40;
    let mut cands: Vec<(f64, Vec<f64>)> = Vec::new();
    for fixed in 0..k {
        let free = k - 1;
        for code in 0..(steps + 1usize).pow(free as u32) {
            let mut x = vec![1.0; k];
            let mut c = code;
            for (_, xi) in x.iter_mut().enumerate().filter(|(i, _)| *i != fixed) {
                *xi = -1.0 + 2.0 * (c % (steps + 1)) as f64 / steps as f64;
                c /= steps + 1;
            }
            cands.push((ratio(&x), x));
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: f64 = 0.0;
    for (mut val, mut x) in cands.into_iter().take(24) {
        let mut h = 2.0 / steps as f64;
        while h > 1e-13 {
            let mut moved = false;
            for i in 0..k {
                for s in [-h, h] {
                    let mut z = x.clone();
                    z[i] += s;
                    let r = ratio(&z);
                    if r > val {
                        val = r;
                        x = z;
                        moved = true;
                    }
                }
            }
            if !moved {
                h /= 2.0;
            }
        }
        best = best.max(val);
    }
    best
}

pub fn four_point_operators() -> Vec<(&'static str, MarkovOperator)> {
    let mut out = vec![
        ("cycle", cayley_markov("cyclic:4")),
        ("klein", cayley_markov("torus:d=2:2")),
        ("dihedral", cayley_markov("dihedral:2")),
    ];
    // {I, rot} on four points: nonsymmetric.
    let space = SpaceFamily::from_edge_lists(&[(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)])]).unwrap();
    let perms = vec![vec![vec![0, 1, 2, 3]], vec![vec![1, 2, 3, 0]]];
    let e = graphs_entourage(&space, &perms).unwrap();
    let sys = FullTranslationSystem::new(&space, perms, e, None).unwrap();
    out.push(("directed", markov(Arc::new(space), &sys, IdentityMode::Include).unwrap()));
    // Path 0-1-2-3 with its two matchings, identity excluded.
    let space = SpaceFamily::from_edge_lists(&[(4, vec![(0, 1), (1, 2), (2, 3)])]).unwrap();
    let perms = vec![vec![vec![0, 1, 2, 3]], vec![vec![1, 0, 3, 2]], vec![vec![0, 2, 1, 3]]];
    let e = graphs_entourage(&space, &perms).unwrap();
    let sys = FullTranslationSystem::new(&space, perms, e, None).unwrap();
    out.push(("path", markov(Arc::new(space), &sys, IdentityMode::Exclude).unwrap()));
    out
}

