//! Property tests for the structural invariants of each module.

use std::sync::Arc;

use kazhdan_core::decomp::{decompose, entourage_matchings, full_system_from_matchings, random_partial_translation};
use kazhdan_core::group::{box_space, cayley_component, generate_family, Dihedral, FiniteGroup, GroupSpec, Sl2, Symmetric};
use kazhdan_core::system::graphs_entourage;
use kazhdan_core::mazur::{
    almost_invariant_c0, conjugate_isometry, mazur_map, norm_p, SignedPermutationIsometry,
};
use kazhdan_core::roe::{DiagonalFunction, RoeOperator, C64};
use kazhdan_core::spectral::{
    dense_restricted_norm, kazhdan_iterate, markov, restricted_gap_l2, restricted_gap_lp,
    spectral_report, GapOptions, IdentityMode, InvariantProjector, KazhdanOptions, LpOptions, SpectralOptions,
};
use kazhdan_core::{FullTranslationSystem, Point, SpaceFamily};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph: random spanning tree plus a few chords.
fn graph(max: usize) -> impl Strategy<Value = (usize, Vec<(Point, Point)>)> {
    (1..=max).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<u32>(), n.saturating_sub(1)),
            prop::collection::vec((any::<u32>(), any::<u32>()), 0..=n),
        )
            .prop_map(|(n, parents, chords)| {
                let mut edges: Vec<(Point, Point)> =
                    parents.iter().enumerate().map(|(i, &p)| (p % (i as u32 + 1), i as u32 + 1)).collect();
                for (a, b) in chords {
                    let (a, b) = (a % n as u32, b % n as u32);
                    if a != b {
                        edges.push((a, b));
                    }
                }
                (n, edges)
            })
    })
}

fn family(max_size: usize, max_comps: usize) -> impl Strategy<Value = SpaceFamily> {
    prop::collection::vec(graph(max_size), 1..=max_comps)
        .prop_map(|lists| SpaceFamily::from_edge_lists(&lists).expect("connected by construction"))
}

/// Matching-cover system on `Δ_1`, identity first.
fn matching_system(space: &SpaceFamily) -> FullTranslationSystem {
    full_system_from_matchings(space, &entourage_matchings(&space.r_diagonal(1))).unwrap()
}

fn random_operator(space: &Arc<SpaceFamily>, rng: &mut ChaCha8Rng, radius: u32) -> RoeOperator {
    let e = space.r_diagonal(radius);
    let mut triplets = Vec::new();
    for (c, x, y) in e.pairs() {
        if rng.gen_bool(0.5) {
            triplets.push((c, x, y, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    RoeOperator::from_triplets(space.clone(), triplets).unwrap()
}

fn max_diff(a: &RoeOperator, b: &RoeOperator) -> f64 {
    a.sub(b).unwrap().sup_entry()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metrics_are_valid(space in family(14, 3)) {
        for c in space.components() {
            prop_assert!(c.validate_metric().is_ok());
        }
    }

    #[test]
    fn diagonals_are_nested(space in family(12, 2), r in 0u32..5, extra in 0u32..4) {
        prop_assert!(space.r_diagonal(r).is_subset(&space.r_diagonal(r + extra)));
    }

    #[test]
    fn composition_is_associative(space in family(10, 2), a in 0u32..3, b in 0u32..3, c in 0u32..3) {
        let (e, f, g) = (space.r_diagonal(a), space.r_diagonal(b), space.r_diagonal(c).transpose());
        let left = space.compose(&space.compose(&e, &f).unwrap(), &g).unwrap();
        let right = space.compose(&e, &space.compose(&f, &g).unwrap()).unwrap();
        prop_assert!(left.is_subset(&right) && right.is_subset(&left));
    }

    #[test]
    fn unit_edge_monogenic_degree(space in family(12, 2)) {
        let diam = space.components().iter().map(|c| c.diameter()).max().unwrap();
        let e0 = space.r_diagonal(1);
        for r in 1..=diam {
            prop_assert_eq!(space.check_monogenic(&e0, &space.r_diagonal(r), 64), Some(r as usize));
        }
    }

    #[test]
    fn nets_are_separated_and_maximal(space in family(16, 2), r in 1u32..4) {
        let net = space.extract_net(r).unwrap();
        for (c, chosen) in net.inclusion.iter().enumerate() {
            let comp = space.component(c);
            for (i, &x) in chosen.iter().enumerate() {
                for &y in &chosen[i + 1..] {
                    prop_assert!(comp.dist(x, y) >= r);
                }
            }
            for z in 0..comp.size() as Point {
                if !chosen.contains(&z) {
                    prop_assert!(chosen.iter().any(|&x| comp.dist(x, z) < r));
                }
            }
        }
    }

    #[test]
    fn cayley_systems_are_sound(kind in 0usize..3, a in 1u64..12, b in 1u64..6) {
        let desc = match kind {
            0 => format!("cyclic:{a},{}", a + b),
            1 => format!("torus:d=2:{},{}", b + 1, b + 2),
            _ => format!("dihedral:{},{}", a + 2, a + b + 2),
        };
        let fam = generate_family(&GroupSpec::parse(&desc).unwrap(), 100_000).unwrap();
        prop_assert!(fam.system.verify().passed());
        for comp in fam.space.components() {
            let balls: Vec<usize> = (0..comp.size() as Point).map(|x| comp.ball(x, 1).len()).collect();
            prop_assert!(balls.iter().all(|&s| s == balls[0]), "{desc}: {balls:?}");
        }
    }

    #[test]
    fn word_metric_is_left_invariant(n in 3u64..24, which in 0usize..3) {
        match which {
            0 => left_invariance(&Dihedral(n))?,
            1 => left_invariance(&Sl2([3, 5][n as usize % 2]))?,
            _ => left_invariance(&Symmetric(3 + n as usize % 2))?,
        }
    }

    #[test]
    fn operator_algebra(space in family(8, 2), seed in any::<u64>(), r1 in 0u32..3, r2 in 0u32..3) {
        let space = Arc::new(space);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_operator(&space, &mut rng, r1);
        let s = random_operator(&space, &mut rng, r2);
        prop_assert!(t.add(&s).unwrap().propagation() <= t.propagation().max(s.propagation()));
        let ts = t.multiply(&s).unwrap();
        prop_assert!(ts.propagation() <= t.propagation() + s.propagation());
        let lhs = ts.adjoint();
        let rhs = s.adjoint().multiply(&t.adjoint()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
        prop_assert_eq!(t.adjoint().adjoint(), t.clone());

        let (a, b) = (C64::new(0.5, -1.25), C64::new(2.0, 0.75));
        let combo = t.scale(a).add(&s.scale(b)).unwrap().phi();
        let expect = t.phi().linear_combination(a, &s.phi(), b);
        prop_assert!(combo.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn decompositions_round_trip(space in family(12, 3), seed in any::<u64>()) {
        let space = Arc::new(space);
        let system = matching_system(&space);
        prop_assert!(system.verify().passed());
        let proj = InvariantProjector::new(&space);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let v = random_partial_translation(&space, system.entourage(), &mut rng);
            let phi = v.to_operator(space.clone()).phi();
            let range: Vec<Vec<Point>> = (0..space.len()).map(|c| v.range(c)).collect();
            prop_assert_eq!(phi.clone(), DiagonalFunction::indicator(&space, &range));
            let d = decompose(&v, &system).unwrap();
            prop_assert!(d.verify(&v, space.clone(), &system).passed());
            prop_assert!(proj.averaging_defect(&v.to_operator(space.clone())) <= 1e-14);
        }
    }

    #[test]
    fn markov_is_doubly_stochastic_and_fixes_p(space in family(12, 2)) {
        let space = Arc::new(space);
        let system = matching_system(&space);
        let a = markov(space.clone(), &system, IdentityMode::Include).unwrap();
        let proj = InvariantProjector::new(&space);
        let p_op = proj.to_operator(space.clone(), false).unwrap();
        let ap = a.operator().multiply(&p_op).unwrap();
        let pa = p_op.multiply(a.operator()).unwrap();
        prop_assert!(max_diff(&ap, &p_op) <= 1e-14);
        prop_assert!(max_diff(&pa, &p_op) <= 1e-14);
        for c in 0..space.len() {
            let m = a.dim(c);
            let dense = a.csr(c).to_dense();
            for i in 0..m {
                prop_assert!((dense.row(i).sum() - 1.0).abs() <= 1e-14);
                prop_assert!((dense.column(i).sum() - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn spectral_chain_and_decay(space in family(16, 2), seed in any::<u64>()) {
        let system = matching_system(&space);
        spectral_check(Arc::new(space), &system, seed)?;
    }

    #[test]
    fn nonsymmetric_spectral_chain(n in 2usize..40, seed in any::<u64>()) {
        // {I, rot} without rot⁻¹ gives a nonsymmetric A.
        let edges: Vec<(Point, Point)> = (0..n as Point).map(|x| (x, (x + 1) % n as Point)).collect();
        let space = SpaceFamily::from_edge_lists(&[(n, edges)]).unwrap();
        let perms = vec![vec![(0..n as Point).collect()], vec![(0..n as Point).map(|y| (y + 1) % n as Point).collect()]];
        let e = graphs_entourage(&space, &perms).unwrap();
        let system = FullTranslationSystem::new(&space, perms, e, None).unwrap();
        spectral_check(Arc::new(space), &system, seed)?;
    }

    #[test]
    fn conjugate_exponent_symmetry(n in 3u64..24, p in 1.1f64..1.9) {
        let fam = generate_family(&GroupSpec::parse(&format!("cyclic:{n}")).unwrap(), 1000).unwrap();
        let a = markov(Arc::new(fam.space), &fam.system, IdentityMode::Include).unwrap();
        let g = restricted_gap_l2(&a, &GapOptions::default());
        let q = p / (p - 1.0);
        let lo = restricted_gap_lp(&a, &g, p, &LpOptions::default()).unwrap();
        let hi = restricted_gap_lp(&a, &g, q, &LpOptions::default()).unwrap();
        prop_assert_eq!(lo[0].upper, hi[0].upper);
        prop_assert!(lo[0].lower <= lo[0].upper && hi[0].lower <= hi[0].upper);
        prop_assert!((lo[0].lower - hi[0].lower).abs() <= 1e-3, "{:?} {:?}", lo[0], hi[0]);
    }

    #[test]
    fn mazur_round_trip_and_sphere(
        re in prop::collection::vec(-3.0f64..3.0, 1..40),
        pi in 0usize..4,
        qi in 0usize..4,
    ) {
        let ps = [1.5, 2.0, 3.0, 4.0];
        let (p, q) = (ps[pi], ps[qi]);
        let f: Vec<C64> = re.iter().enumerate().map(|(i, &x)| C64::new(x, if i % 3 == 0 { 0.0 } else { x / 2.0 })).collect();
        let back = mazur_map(&mazur_map(&f, p, q).unwrap(), q, p).unwrap();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        let nrm = norm_p(&f, p);
        if nrm > 0.0 {
            let unit: Vec<C64> = f.iter().map(|z| z / nrm).collect();
            let img = mazur_map(&unit, p, 2.0).unwrap();
            prop_assert!((norm_p(&img, 2.0) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn conjugated_permutations_fix_the_operator(n in 2u64..20, i in 0usize..3, seed in any::<u64>(), p in 1.2f64..5.0) {
        let fam = generate_family(&GroupSpec::parse(&format!("cyclic:{n}")).unwrap(), 1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = SignedPermutationIsometry::from_translation(&fam.system, i % fam.system.len())
            .with_random_phases(&mut rng);
        let cert = conjugate_isometry(&v, p, 100, &mut rng).unwrap();
        prop_assert!(cert.passed(1e-12), "{cert:?}");
        prop_assert_eq!(cert.isometry.sigma(0), v.sigma(0));
        for (a, b) in cert.isometry.h(0).iter().zip(v.h(0)) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn c0_bound_holds(space in family(20, 2), k in 1.0f64..80.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = vec![0 as Point; space.len()];
        let rec = almost_invariant_c0(&space, &base, k, 1, 100, &mut rng).unwrap();
        prop_assert!(rec.max_defect <= rec.bound + 1e-12, "{rec:?}");
        prop_assert!(rec.passed);
    }
}

fn spectral_check(space: Arc<SpaceFamily>, system: &FullTranslationSystem, seed: u64) -> Result<(), TestCaseError> {
    let a = markov(space, system, IdentityMode::Include).unwrap();
    let opts = SpectralOptions {
        gap: GapOptions { seed, ..Default::default() },
        lp: LpOptions { seed, restarts: 4, ..Default::default() },
        p_values: vec![1.5, 3.0],
        kazhdan: Some(KazhdanOptions { k_max: 60, ..Default::default() }),
        witness_samples: 500,
        ..Default::default()
    };
    let report = spectral_report(&a, &opts).unwrap();
    for c in &report.components {
        let dense = dense_restricted_norm(&a, c.component);
        prop_assert!((c.lambda() - dense).abs() <= 1e-9, "{} vs {}", c.lambda(), dense);
        prop_assert!(c.c_bound * (1.0 + c.s_bound) <= 1.0 + 1e-12);
        if let Some(w) = c.witness {
            prop_assert!(w >= c.c_bound - 1e-9);
        }
        for iv in &c.lp {
            prop_assert!(iv.lower <= iv.upper);
        }
        if let Some(t) = &c.kazhdan {
            prop_assert!(t.bound_ok && t.monotone, "{t:?}");
        }
        prop_assert!(c.passed(), "{c:?}");
    }
    let gaps = restricted_gap_l2(&a, &GapOptions { seed, ..Default::default() });
    for t in kazhdan_iterate(&a, &gaps, &KazhdanOptions { k_max: 30, ..Default::default() }) {
        let t = t.unwrap();
        prop_assert!(t.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
    Ok(())
}

fn left_invariance<G: FiniteGroup>(group: &G) -> Result<(), TestCaseError> {
    let gens: Vec<G::Elem> = group.standard_generators().into_iter().map(|(_, s)| s).collect();
    let (comp, _) = cayley_component(0, group, &gens).unwrap();
    let elements = group.elements();
    let index = |g: &G::Elem| elements.iter().position(|h| h == g).unwrap();
    for g in &elements {
        let moved: Vec<usize> = elements.iter().map(|x| index(&group.mul(g, x))).collect();
        for x in 0..elements.len() {
            for y in 0..elements.len() {
                prop_assert_eq!(comp.dist(x as Point, y as Point), comp.dist(moved[x] as Point, moved[y] as Point));
            }
        }
    }
    Ok(())
}

#[test]
fn box_space_diameters_nondecreasing() {
    for desc in ["cyclic:2,4,8,16,32", "torus:d=2:2,4,8"] {
        let fam = box_space(&GroupSpec::parse(desc).unwrap(), 100_000).unwrap();
        let d: Vec<u32> = fam.space.components().iter().map(|c| c.diameter()).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1]), "{desc}: {d:?}");
        assert!(fam.system.verify().passed());
    }
}
