//! Deterministic orchestration: generate → decompose → spectral → experiments.
//!
//! Run functions return report documents and file contents; writing to disk
//! is left to the caller.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::config::RunConfig;
use crate::decomp::{decompose, entourage_matchings, full_system_from_matchings, random_partial_translation};
use crate::error::{Error, Result};
use crate::group::{box_space, generate_family, GroupSpec};
use crate::mazur::{
    almost_invariant_c0, conjugate_isometry, loglog_slope, roundtrip_defect, sphere_defect, transfer_defect,
    DecayVector, SignedPermutationIsometry,
};
use crate::report::{fmt_g, fmt_opt, ReportDocument};
use crate::roe::{PartialTranslation, C64};
use crate::space::{Point, SpaceFamily};
use crate::spectral::{
    component_rng, markov, spectral_report, GapOptions, InvariantProjector, KazhdanOptions, LpOptions,
    SpectralOptions, SpectralReport, Stream,
};
use crate::system::FullTranslationSystem;

/// A space family with its generating system.
#[derive(Debug, Clone)]
pub struct Family {
    pub descriptor: String,
    pub space: Arc<SpaceFamily>,
    pub system: FullTranslationSystem,
}

/// Builds the family named by `cfg.family` (`box:` prefix for box spaces)
/// and raises its system to radius `cfg.radius`.
pub fn build_family(cfg: &RunConfig) -> Result<Family> {
    let desc = cfg.family.trim();
    if desc.is_empty() {
        return Err(Error::OutOfRange("empty family descriptor".into()));
    }
    let fam = match desc.strip_prefix("box:") {
        Some(rest) => box_space(&GroupSpec::parse(rest)?, cfg.budget)?,
        None => generate_family(&GroupSpec::parse(desc)?, cfg.budget)?,
    };
    if cfg.radius == 0 {
        return Err(Error::OutOfRange("radius must be >= 1".into()));
    }
    let system = fam.system.raise(&fam.space, cfg.radius as usize)?;
    Ok(Family {
        descriptor: desc.to_string(),
        space: Arc::new(fam.space),
        system,
    })
}

/// Family loaded from `space v1` / `system v1` texts.
pub fn load_family(space_text: &str, system_text: &str) -> Result<Family> {
    let space = SpaceFamily::from_text(space_text)?;
    let system = FullTranslationSystem::from_text(&space, system_text)?;
    Ok(Family {
        descriptor: "loaded".into(),
        space: Arc::new(space),
        system,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentStats {
    pub component: usize,
    pub size: usize,
    pub diameter: u32,
    pub edges: usize,
    pub max_ball_1: usize,
}

fn space_stats(space: &SpaceFamily) -> Vec<ComponentStats> {
    space
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| ComponentStats {
            component: i,
            size: c.size(),
            diameter: c.diameter(),
            edges: c.edges().len(),
            max_ball_1: c.max_ball(1),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct SystemStats {
    translations: usize,
    inverse_closed: bool,
    entourage_pairs: usize,
    bijective: bool,
    supported: bool,
    covering: bool,
}

fn system_stats(system: &FullTranslationSystem) -> (SystemStats, bool) {
    let check = system.verify();
    (
        SystemStats {
            translations: system.len(),
            inverse_closed: system.inverse_closed(),
            entourage_pairs: system.entourage().pair_count(),
            bijective: check.bijective,
            supported: check.supported,
            covering: check.covering,
        },
        check.passed(),
    )
}

/// Human-readable component table.
pub fn component_table(space: &SpaceFamily) -> String {
    let mut s = String::from("component  size  diameter  edges  max|B(x,1)|\n");
    for st in space_stats(space) {
        let _ = writeln!(
            s,
            "{:>9}  {:>4}  {:>8}  {:>5}  {:>11}",
            st.component, st.size, st.diameter, st.edges, st.max_ball_1
        );
    }
    s
}

pub struct GenerateOutput {
    pub family: Family,
    pub space_text: String,
    pub system_text: String,
    pub table: String,
    pub doc: ReportDocument,
}

pub fn run_generate(cfg: &RunConfig) -> Result<GenerateOutput> {
    let family = build_family(cfg)?;
    let mut doc = ReportDocument::new("generate", cfg, cfg.seed)?;
    doc.add_section("space", &space_stats(&family.space), true)?;
    let (stats, ok) = system_stats(&family.system);
    doc.add_section("system", &stats, ok)?;
    Ok(GenerateOutput {
        space_text: family.space.to_text(),
        system_text: family.system.to_text(),
        table: component_table(&family.space),
        family,
        doc,
    })
}

pub fn spectral_options(cfg: &RunConfig, kazhdan: bool) -> SpectralOptions {
    SpectralOptions {
        gap: GapOptions {
            method: cfg.method,
            tol: cfg.gap_tol,
            max_iter: 100_000,
            dense_limit: cfg.dense_limit,
            seed: cfg.seed,
        },
        lp: LpOptions {
            restarts: cfg.lp_restarts,
            max_iter: 200,
            seed: cfg.seed,
        },
        p_values: cfg.p_values.clone(),
        kazhdan: kazhdan.then_some(KazhdanOptions {
            k_max: cfg.k_max,
            tol: cfg.tol,
            dense_limit: 64,
        }),
        witness_samples: cfg.witness_samples,
        witness_limit: 64,
        threshold: cfg.threshold,
    }
}

/// `component_id,size,n,p,lambda,lambda_lo_p,lambda_hi_p,S_bound,c_bound,iters,flag`,
/// one row per component and requested `p` (a single row with empty `p`
/// when none is requested).
pub fn spectral_csv(report: &SpectralReport) -> String {
    let mut s = String::from("component_id,size,n,p,lambda,lambda_lo_p,lambda_hi_p,S_bound,c_bound,iters,flag\n");
    for c in &report.components {
        let tail = format!(
            "{},{},{},{}",
            fmt_g(c.s_bound),
            fmt_g(c.c_bound),
            c.gap.iterations,
            c.flag()
        );
        if c.lp.is_empty() {
            let _ = writeln!(s, "{},{},{},,{},,,{tail}", c.component, c.size, c.n, fmt_g(c.lambda()));
        }
        for iv in &c.lp {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{tail}",
                c.component,
                c.size,
                c.n,
                fmt_g(iv.p),
                fmt_g(c.lambda()),
                fmt_g(iv.lower),
                fmt_g(iv.upper)
            );
        }
    }
    s
}

/// `component_id,k,norm,lambda_pow_k,within_bound`.
pub fn kazhdan_csv(report: &SpectralReport) -> String {
    let mut s = String::from("component_id,k,norm,lambda_pow_k,within_bound\n");
    for c in &report.components {
        let Some(t) = &c.kazhdan else { continue };
        let mut pow = 1.0;
        for (k, &a) in t.norms.iter().enumerate() {
            pow *= t.lambda;
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.component,
                k + 1,
                fmt_g(a),
                fmt_g(pow),
                a <= pow * (1.0 + 1e-9)
            );
        }
    }
    s
}

pub struct GapOutput {
    pub report: SpectralReport,
    pub csv: String,
    pub kazhdan_csv: Option<String>,
    pub doc: ReportDocument,
}

/// Spectral pipeline: Markov operator → λ, ℓᵖ intervals, parameter chain,
/// uniformity verdict and, when requested, the Kazhdan tables.
pub fn run_gap(cfg: &RunConfig, family: &Family, with_kazhdan: bool) -> Result<GapOutput> {
    let command = if with_kazhdan { "kazhdan" } else { "gap" };
    let a = markov(family.space.clone(), &family.system, cfg.identity)?;
    let report = spectral_report(&a, &spectral_options(cfg, with_kazhdan))?;
    let mut doc = ReportDocument::new(command, cfg, cfg.seed)?;
    doc.add_section("space", &space_stats(&family.space), true)?;
    let (stats, ok) = system_stats(&family.system);
    doc.add_section("system", &stats, ok)?;
    doc.add_section("spectral", &report, report.passed())?;
    doc.add_section("verdict", &serde_json::json!({
        "banner": report.verdict.to_string(),
        "uniform": report.verdict.uniform,
        "threshold": report.verdict.threshold,
        "max_lambda": report.verdict.max_lambda,
        "witness_component": report.verdict.witness_component,
        "averaged_translations": a.n(),
    }), true)?;
    Ok(GapOutput {
        csv: spectral_csv(&report),
        kazhdan_csv: with_kazhdan.then(|| kazhdan_csv(&report)),
        report,
        doc,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DecomposeSummary {
    pub samples: usize,
    pub passed: usize,
    pub reconstruction_failures: usize,
    pub disjointness_failures: usize,
    pub mass_failures: usize,
    /// Largest `|V·kP - Φ(V)·kP|` entry seen.
    pub averaging_defect: f64,
    pub max_terms: usize,
}

impl DecomposeSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.samples && self.averaging_defect <= 1e-14
    }

    pub fn line(&self) -> String {
        format!(
            "decompose: {}/{} pass (reconstruction failures {}, disjointness failures {}, mass failures {}); averaging defect {}",
            self.passed,
            self.samples,
            self.reconstruction_failures,
            self.disjointness_failures,
            self.mass_failures,
            fmt_g(self.averaging_defect)
        )
    }
}

pub struct DecomposeOutput {
    pub summary: DecomposeSummary,
    /// `decomp v1` text of the single given translation.
    pub decomp_text: Option<String>,
    pub doc: ReportDocument,
}

fn check_one(family: &Family, proj: &InvariantProjector, v: &PartialTranslation, sum: &mut DecomposeSummary) -> Result<String> {
    let d = decompose(v, &family.system)?;
    let check = d.verify(v, family.space.clone(), &family.system);
    sum.samples += 1;
    sum.passed += check.passed() as usize;
    sum.reconstruction_failures += !check.reconstruction as usize;
    sum.disjointness_failures += !check.disjoint as usize;
    sum.mass_failures += !check.mass as usize;
    sum.max_terms = sum.max_terms.max(d.nonzero_terms());
    let op = v.to_operator(family.space.clone());
    sum.averaging_defect = sum.averaging_defect.max(proj.averaging_defect(&op));
    Ok(d.to_text())
}

/// Decomposes the given translation, or `cfg.decompose_samples` random ones
/// supported in the system's entourage.
pub fn run_decompose(cfg: &RunConfig, family: &Family, given: Option<&PartialTranslation>) -> Result<DecomposeOutput> {
    let proj = InvariantProjector::new(&family.space);
    let mut summary = DecomposeSummary::default();
    let decomp_text = match given {
        Some(v) => Some(check_one(family, &proj, v, &mut summary)?),
        None => {
            let mut rng = component_rng(cfg.seed, Stream::Decompose, 0);
            for _ in 0..cfg.decompose_samples {
                let v = random_partial_translation(&family.space, family.system.entourage(), &mut rng);
                check_one(family, &proj, &v, &mut summary)?;
            }
            None
        }
    };
    let mut doc = ReportDocument::new("decompose", cfg, cfg.seed)?;
    doc.add_section("decompose", &summary, summary.all_passed())?;
    Ok(DecomposeOutput {
        summary,
        decomp_text,
        doc,
    })
}

/// One CSV row of the Mazur suite. `pass` is `None` for findings that are
/// reported but not asserted.
#[derive(Debug, Clone, Serialize)]
pub struct MazurRow {
    pub experiment: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub k: Option<f64>,
    pub radius: Option<u32>,
    pub defect_p: Option<f64>,
    pub defect_2: Option<f64>,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

impl MazurRow {
    fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            p: None,
            q: None,
            k: None,
            radius: None,
            defect_p: None,
            defect_2: None,
            bound: None,
            pass: None,
        }
    }
}

pub fn mazur_csv(rows: &[MazurRow]) -> String {
    let mut s = String::from("experiment,p,q,k,R,defect_p,defect_2,bound,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            fmt_opt(r.p),
            fmt_opt(r.q),
            fmt_opt(r.k),
            r.radius.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(r.defect_p),
            fmt_opt(r.defect_2),
            fmt_opt(r.bound),
            match r.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "finding",
            }
        );
    }
    s
}

pub struct MazurOutput {
    pub rows: Vec<MazurRow>,
    pub slope: Option<f64>,
    pub csv: String,
    pub doc: ReportDocument,
}

const MAZUR_TOL: f64 = 1e-12;

/// Round trip, sphere mapping, conjugation, C₀ almost invariance with the
/// k-sweep slope, and the transfer series on a 64-cycle.
pub fn run_mazur(cfg: &RunConfig, family: &Family) -> Result<MazurOutput> {
    let mut rng = component_rng(cfg.seed, Stream::Mazur, 0);
    let mut rows = Vec::new();
    let mut ps: Vec<f64> = cfg.p_values.clone();
    if !ps.contains(&2.0) {
        ps.push(2.0);
    }

    for &p in &ps {
        for &q in &ps {
            let d = roundtrip_defect(p, q, 32, 100, &mut rng)?;
            rows.push(MazurRow {
                p: Some(p),
                q: Some(q),
                defect_p: Some(d),
                bound: Some(MAZUR_TOL),
                pass: Some(d < MAZUR_TOL),
                ..MazurRow::new("roundtrip")
            });
        }
        let d = sphere_defect(p, 32, 100, &mut rng)?;
        rows.push(MazurRow {
            p: Some(p),
            q: Some(2.0),
            defect_2: Some(d),
            bound: Some(MAZUR_TOL),
            pass: Some(d <= MAZUR_TOL),
            ..MazurRow::new("sphere")
        });
    }

    for &p in &cfg.p_values {
        let mut lin: f64 = 0.0;
        let mut act: f64 = 0.0;
        let mut same = true;
        for i in 0..family.system.len() {
            let v = SignedPermutationIsometry::from_translation(&family.system, i).with_random_phases(&mut rng);
            let cert = conjugate_isometry(&v, p, 100, &mut rng)?;
            lin = lin.max(cert.linearity_defect);
            act = act.max(cert.action_defect);
            same &= cert.same_operator;
        }
        rows.push(MazurRow {
            p: Some(p),
            q: Some(2.0),
            defect_p: Some(act),
            defect_2: Some(lin),
            bound: Some(MAZUR_TOL),
            pass: Some(same && lin < MAZUR_TOL && act < MAZUR_TOL),
            ..MazurRow::new("conjugation")
        });
    }

    let base = vec![0 as Point; family.space.len()];
    let mut defects = Vec::new();
    for &k in &cfg.mazur_ks {
        let rec = almost_invariant_c0(&family.space, &base, k, cfg.mazur_radius, cfg.mazur_samples, &mut rng)?;
        defects.push(rec.max_defect);
        rows.push(MazurRow {
            k: Some(k),
            radius: Some(cfg.mazur_radius),
            defect_p: Some(rec.max_defect),
            bound: Some(rec.bound),
            pass: Some(rec.passed),
            ..MazurRow::new(if rec.exhaustive { "c0-exhaustive" } else { "c0-sampled" })
        });
    }
    let slope = loglog_slope(&cfg.mazur_ks, &defects);
    if cfg.mazur_radius >= 1 && cfg.mazur_ks.len() >= 2 {
        rows.push(MazurRow {
            radius: Some(cfg.mazur_radius),
            defect_p: slope,
            bound: Some(-2.0),
            pass: Some(slope.is_some_and(|s| (s + 2.0).abs() <= 0.1)),
            ..MazurRow::new("c0-slope")
        });
    }

    let cycle = generate_family(&GroupSpec::parse("cyclic:64")?, usize::MAX)?;
    let rot = SignedPermutationIsometry::from_translation(&cycle.system, 1);
    for &p in &cfg.p_values {
        let mut series = Vec::new();
        for k in [8.0, 16.0, 32.0] {
            let f = DecayVector::new(&cycle.space, &[0], k)?;
            let xi: Vec<C64> = f.values[0].iter().map(|&v| C64::new(v, 0.0)).collect();
            let (dp, d2) = transfer_defect(&xi, &rot, 0, p)?;
            series.push((dp, d2));
            rows.push(MazurRow {
                p: Some(p),
                q: Some(2.0),
                k: Some(k),
                defect_p: Some(dp),
                defect_2: Some(d2),
                ..MazurRow::new("transfer")
            });
        }
        let monotone = series
            .windows(2)
            .all(|w| w[1].0 > w[0].0 || w[1].1 <= w[0].1);
        rows.push(MazurRow {
            p: Some(p),
            q: Some(2.0),
            bound: Some(if monotone { 1.0 } else { 0.0 }),
            ..MazurRow::new("transfer-monotone")
        });
    }

    let passed = rows.iter().all(|r| r.pass != Some(false));
    let mut doc = ReportDocument::new("mazur", cfg, cfg.seed)?;
    doc.add_section("mazur", &serde_json::json!({ "rows": rows, "slope": slope }), passed)?;
    Ok(MazurOutput {
        csv: mazur_csv(&rows),
        rows,
        slope,
        doc,
    })
}

pub struct NetOutput {
    pub net_space_text: String,
    pub gap: GapOutput,
}

/// Extracts an `R`-net (`R = cfg.radius`), builds a matching system on its
/// connecting entourage and reruns the spectral pipeline on it.
pub fn run_net(cfg: &RunConfig, family: &Family) -> Result<NetOutput> {
    let net = family.space.extract_net(cfg.radius)?;
    let space = Arc::new(net.space);
    // The net keeps the ambient metric, so neighbours sit at distance in
    // [R, 2R); Δ_{2R-1} is the scale that connects it.
    let cover = entourage_matchings(&space.r_diagonal(2 * cfg.radius - 1));
    let system = full_system_from_matchings(&space, &cover)?;
    let net_family = Family {
        descriptor: format!("net({}, R={})", family.descriptor, cfg.radius),
        space: space.clone(),
        system,
    };
    let mut gap = run_gap(cfg, &net_family, false)?;
    gap.doc.command = "net".into();
    gap.doc.add_section(
        "net",
        &serde_json::json!({
            "radius": cfg.radius,
            "ambient_sizes": family.space.sizes(),
            "net_sizes": space.sizes(),
            "inclusion": net.inclusion,
            "matchings": cover.num_matchings(),
        }),
        true,
    )?;
    Ok(NetOutput {
        net_space_text: space.to_text(),
        gap,
    })
}
