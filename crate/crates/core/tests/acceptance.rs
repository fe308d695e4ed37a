//! Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p kazhdan-core --test acceptance -- --nocapture`
//! to see the report.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{four_point_operators, grid_norm};
use kazhdan_core::config::RunConfig;
use kazhdan_core::decomp::{decompose, random_partial_translation};
use kazhdan_core::group::{box_space, generate_family, GroupSpec};
use kazhdan_core::mazur::{
    almost_invariant_c0, conjugate_isometry, loglog_slope, roundtrip_defect, SignedPermutationIsometry,
};
use kazhdan_core::pipeline::{build_family, run_gap};
use kazhdan_core::spectral::{
    amplified_invariants_check, component_rng, dense_restricted_norm, kazhdan_iterate, markov, restricted_gap_l2,
    restricted_gap_lp, spectral_report, uniform_gap_verdict, GapOptions, IdentityMode, InvariantProjector,
    KazhdanOptions, LpOptions, MarkovOperator, SpectralOptions, Stream,
};
use kazhdan_core::{FullTranslationSystem, Point, SpaceFamily};

const CYCLES: &str = "cyclic:4,8,16,32,64,128,256";

struct Outcome {
    passed: bool,
    detail: String,
}

fn family(desc: &str) -> (Arc<SpaceFamily>, FullTranslationSystem) {
    let fam = generate_family(&GroupSpec::parse(desc).unwrap(), 1_000_000).unwrap();
    (Arc::new(fam.space), fam.system)
}

fn markov_of(desc: &str) -> MarkovOperator {
    let (space, system) = family(desc);
    markov(space, &system, IdentityMode::Include).unwrap()
}

fn cycle_law(n: usize) -> f64 {
    (2.0 + (2.0 * std::f64::consts::PI / n as f64).cos()) / 3.0
}

fn cycle_spectral_law() -> Outcome {
    let a = markov_of(CYCLES);
    let gaps = restricted_gap_l2(&a, &GapOptions::default());
    let mut worst: f64 = 0.0;
    let mut oracle_worst: f64 = 0.0;
    for g in &gaps {
        let want = cycle_law(g.size);
        worst = worst.max((g.lambda - want).abs());
        if g.size <= 64 {
            let dense = g.dense_lambda.unwrap_or_else(|| dense_restricted_norm(&a, g.component));
            oracle_worst = oracle_worst.max((dense - want).abs()).max((dense - g.lambda).abs());
        }
    }
    Outcome {
        passed: worst <= 1e-9 && oracle_worst <= 1e-9,
        detail: format!("max |λ - (2+cos(2π/n))/3| = {worst:.2e}, dense disagreement {oracle_worst:.2e}"),
    }
}

fn kazhdan_decay() -> Outcome {
    let a = markov_of(CYCLES);
    let gaps = restricted_gap_l2(&a, &GapOptions::default());
    let opts = KazhdanOptions { k_max: 200, tol: 0.0, dense_limit: 64 };
    let mut passed = true;
    let mut worst_ratio: f64 = 0.0;
    let mut dense = 0;
    for t in kazhdan_iterate(&a, &gaps, &opts) {
        let t = t.unwrap();
        let mut pow = 1.0;
        for &n in &t.norms {
            pow *= t.lambda;
            if pow > 0.0 {
                worst_ratio = worst_ratio.max(n / pow);
            }
        }
        passed &= t.bound_ok && t.monotone && t.norms.len() == 200;
        if t.dense {
            dense += 1;
            passed &= t.entrywise_ok == Some(true);
        }
    }
    Outcome {
        passed,
        detail: format!("max ‖Aᵏ−P‖/λᵏ over k ≤ 200 = {worst_ratio:.12}, {dense} components checked entrywise"),
    }
}

fn parameter_chain() -> Outcome {
    let opts = SpectralOptions { witness_samples: 10_000, ..Default::default() };
    let mut passed = true;
    let mut sampled = 0;
    let mut min_slack = f64::INFINITY;
    for desc in [CYCLES, "torus:d=2:3,4,5", "dihedral:3,5,8", "sl2:3,5,7", "symmetric:n=3,4"] {
        let report = spectral_report(&markov_of(desc), &opts).unwrap();
        for c in &report.components {
            let lam = c.lambda();
            passed &= c.s_bound <= lam / (1.0 - lam) + 1e-12;
            passed &= c.c_bound >= 1.0 / (1.0 + c.s_bound) - 1e-12;
            if c.size <= 64 && c.size > 1 {
                let Some(w) = c.witness else {
                    passed = false;
                    continue;
                };
                sampled += 1;
                min_slack = min_slack.min(w - c.c_bound);
                passed &= w >= c.c_bound - 1e-9;
            }
        }
    }
    Outcome {
        passed,
        detail: format!("{sampled} components sampled (10⁴ vectors each), min witness − c = {min_slack:.3e}"),
    }
}

fn decomposition_round_trip() -> Outcome {
    let mut total = 0;
    let mut ok = 0;
    for desc in ["cyclic:4,8,16,32,64", "torus:d=2:3,4,6", "sl2:3,5"] {
        let (space, system) = family(desc);
        let mut rng = component_rng(0, Stream::Decompose, 0);
        for _ in 0..1000 {
            let v = random_partial_translation(&space, system.entourage(), &mut rng);
            let d = decompose(&v, &system).unwrap();
            total += 1;
            ok += d.verify(&v, space.clone(), &system).passed() as usize;
        }
    }
    Outcome {
        passed: ok == total,
        detail: format!("{ok}/{total} decompositions reconstruct, disjoint, mass-exact"),
    }
}

fn averaging_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sampled = 0;
    let mut families: Vec<(Arc<SpaceFamily>, FullTranslationSystem)> = [
        "cyclic:4,8,16,32,64",
        "torus:d=2:3,4,6",
        "dihedral:3,5,8",
        "symmetric:n=3,4",
        "sl2:3,5",
    ]
    .iter()
    .map(|d| family(d))
    .collect();
    for desc in ["cyclic:2,4,8,16", "torus:d=2:2,4"] {
        let fam = box_space(&GroupSpec::parse(desc).unwrap(), 100_000).unwrap();
        families.push((Arc::new(fam.space), fam.system));
    }
    for (space, system) in &families {
        let proj = InvariantProjector::new(space);
        let mut rng = component_rng(1, Stream::Decompose, 0);
        for _ in 0..200 {
            let v = random_partial_translation(space, system.entourage(), &mut rng);
            worst = worst.max(proj.averaging_defect(&v.to_operator(space.clone())));
            sampled += 1;
        }
    }
    Outcome {
        passed: worst <= 1e-14,
        detail: format!("{sampled} translations on {} families, max |V·kP − Φ(V)·kP| = {worst:.2e}", families.len()),
    }
}

fn expander_contrast() -> Outcome {
    let sl2 = markov_of("sl2:3,5,7,11,13");
    let gaps = restricted_gap_l2(&sl2, &GapOptions::default());
    let mut oracle_gap: f64 = 0.0;
    let mut sizes = Vec::new();
    for g in &gaps {
        let dense = dense_restricted_norm(&sl2, g.component);
        oracle_gap = oracle_gap.max((dense - g.lambda).abs());
        sizes.push(g.size);
    }
    let sl2_lambdas: Vec<f64> = gaps.iter().map(|g| g.lambda).collect();
    let sl2_max = sl2_lambdas.iter().cloned().fold(0.0, f64::max);
    let cycles = restricted_gap_l2(&markov_of(CYCLES), &GapOptions::default());
    let cycle_lambdas: Vec<f64> = cycles.iter().map(|g| g.lambda).collect();
    let c256 = cycles.iter().find(|g| g.size == 256).unwrap().lambda;
    let uniform = uniform_gap_verdict(&sl2_lambdas, 0.999).unwrap();
    let contrast = uniform_gap_verdict(&cycle_lambdas, 0.999).unwrap();
    Outcome {
        passed: sl2_max <= 0.995
            && oracle_gap <= 1e-9
            && c256 > 0.999
            && uniform.uniform
            && !contrast.uniform
            && *sizes.last().unwrap() == 2184,
        detail: format!(
            "SL₂ max λ = {sl2_max:.9} (dense gap {oracle_gap:.1e}, largest {} pts); C₂₅₆ λ = {c256:.9}; verdicts {} / {}",
            sizes.last().unwrap(),
            if uniform.uniform { "UNIFORM" } else { "NON-UNIFORM" },
            if contrast.uniform { "UNIFORM" } else { "NON-UNIFORM" },
        ),
    }
}

fn lp_soundness() -> Outcome {
    let mut passed = true;
    let mut notes = Vec::new();
    // Lower ≤ upper on every component up to 64 points.
    let mut checked = 0;
    for desc in ["cyclic:4,8,16,32,64", "torus:d=2:3,4", "dihedral:3,5,8", "sl2:3"] {
        let a = markov_of(desc);
        let gaps = restricted_gap_l2(&a, &GapOptions::default());
        for p in [1.5, 3.0, 4.0] {
            for iv in restricted_gap_lp(&a, &gaps, p, &LpOptions::default()).unwrap() {
                if a.dim(iv.component) <= 64 {
                    passed &= iv.lower <= iv.upper;
                    checked += 1;
                }
            }
        }
        let two = restricted_gap_lp(&a, &gaps, 2.0, &LpOptions::default()).unwrap();
        for (iv, g) in two.iter().zip(&gaps) {
            passed &= iv.width() <= 1e-6 && iv.lower - 1e-6 <= g.lambda && g.lambda <= iv.upper + 1e-6;
        }
        if a.is_symmetric() {
            for (p, q) in [(1.5, 3.0), (4.0, 4.0 / 3.0)] {
                let up = restricted_gap_lp(&a, &gaps, p, &LpOptions::default()).unwrap();
                let uq = restricted_gap_lp(&a, &gaps, q, &LpOptions::default()).unwrap();
                passed &= up.iter().zip(&uq).all(|(x, y)| x.upper == y.upper);
            }
        }
    }
    notes.push(format!("{checked} intervals ordered"));
    // Grid-search brackets on four-point components.
    let mut brackets = 0;
    for (_, a) in four_point_operators() {
        let gaps = restricted_gap_l2(&a, &GapOptions::default());
        let m = a.dense_m(0);
        for p in [1.5, 3.0, 4.0] {
            let iv = &restricted_gap_lp(&a, &gaps, p, &LpOptions::default()).unwrap()[0];
            let grid = grid_norm(&m, p);
            passed &= iv.lower <= grid + 1e-9 && grid <= iv.upper + 1e-12;
            brackets += 1;
        }
    }
    notes.push(format!("{brackets} grid brackets"));
    Outcome { passed, detail: notes.join(", ") }
}

fn mazur_suite() -> Outcome {
    let mut rng = component_rng(0, Stream::Mazur, 0);
    let ps = [1.5, 2.0, 3.0, 4.0];
    let mut roundtrip: f64 = 0.0;
    for p in ps {
        for q in ps {
            roundtrip = roundtrip.max(roundtrip_defect(p, q, 64, 100, &mut rng).unwrap());
        }
    }
    let (_, system) = family("cyclic:16,32");
    let mut linearity: f64 = 0.0;
    let mut same = true;
    for p in [1.5, 3.0, 4.0] {
        for i in 0..system.len() {
            let v = SignedPermutationIsometry::from_translation(&system, i).with_random_phases(&mut rng);
            let cert = conjugate_isometry(&v, p, 100, &mut rng).unwrap();
            linearity = linearity.max(cert.linearity_defect);
            same &= cert.passed(1e-12);
        }
    }
    let (space, _) = family("cyclic:16,32,64");
    let base = vec![0 as Point; space.len()];
    let ks = [4.0, 8.0, 16.0, 32.0, 64.0];
    let mut c0_ok = true;
    let mut defects = Vec::new();
    for k in ks {
        let rec = almost_invariant_c0(&space, &base, k, 1, 200, &mut rng).unwrap();
        c0_ok &= rec.exhaustive && rec.passed;
        defects.push(rec.max_defect);
    }
    let slope = loglog_slope(&ks, &defects).unwrap_or(f64::NAN);
    Outcome {
        passed: roundtrip < 1e-12 && linearity < 1e-12 && same && c0_ok && (slope + 2.0).abs() <= 0.1,
        detail: format!(
            "round trip {roundtrip:.1e}, linearity {linearity:.1e}, C₀ bound {}, slope {slope:.4}",
            if c0_ok { "holds" } else { "violated" }
        ),
    }
}

fn amplification() -> Outcome {
    let mut passed = true;
    let mut dims = Vec::new();
    for desc in ["cyclic:3,4,8,12", "torus:d=2:2,3,4"] {
        let a = markov_of(desc);
        for layers in [2, 3] {
            let check = amplified_invariants_check(&a, layers).unwrap();
            passed &= check.passed && check.total_dim() == a.num_components();
            dims.push(format!("{desc}×{layers}: {}", check.total_dim()));
        }
    }
    Outcome { passed, detail: dims.join("; ") }
}

fn determinism() -> Outcome {
    let cfg = RunConfig {
        family: "cyclic:4,8,16,32,64".into(),
        seed: 17,
        ..Default::default()
    };
    let fam = build_family(&cfg).unwrap();
    let a = run_gap(&cfg, &fam, true).unwrap();
    let b = run_gap(&cfg, &build_family(&cfg).unwrap(), true).unwrap();
    Outcome {
        passed: a.doc.determinism_hash == b.doc.determinism_hash && a.csv == b.csv,
        detail: format!("hash {}", &a.doc.determinism_hash[..16]),
    }
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 10] = [
        ("cycle spectral law", cycle_spectral_law, Some(Duration::from_secs(5))),
        ("Kazhdan decay", kazhdan_decay, Some(Duration::from_secs(10))),
        ("parameter chain", parameter_chain, None),
        ("decomposition round trip", decomposition_round_trip, Some(Duration::from_secs(10))),
        ("averaging projection identity", averaging_identity, None),
        ("expander contrast", expander_contrast, Some(Duration::from_secs(120))),
        ("lp interval soundness", lp_soundness, None),
        ("Mazur suite", mazur_suite, None),
        ("amplification invariants", amplification, None),
        ("determinism", determinism, None),
    ];
    let mut failures = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed < b);
        let ok = out.passed && in_time;
        let limit = budget.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        println!(
            "[{}] {:>2}. {name}: {} ({:.2}s{limit})",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
        if !ok {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
