use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kazhdan_core::config::RunConfig;
use kazhdan_core::pipeline::{self, Family};
use kazhdan_core::report::{fmt_g, ReportDocument};
use kazhdan_core::PartialTranslation;

/// Only environment variable consulted: overrides the output directory.
const OUT_ENV: &str = "KAZHDAN_OUT";

#[derive(Parser)]
#[command(name = "kazhdan", version, about = "Spectral gaps, translation decompositions and Mazur-map experiments on finite space families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a family and write its `space v1` / `system v1` files.
    Generate(Common),
    /// Spectral gap, ℓᵖ intervals, parameter chain and uniformity verdict.
    Gap(Common),
    /// Decompose a partial translation (or a random batch) into the system.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// `pt v1` file; without it a random batch is checked.
        #[arg(long)]
        pt: Option<PathBuf>,
    },
    /// Gap report plus the ‖Aᵏ − P‖ table.
    Kazhdan(Common),
    /// Mazur-map round trip, conjugation, C₀ and transfer experiments.
    Mazur(Common),
    /// Extract an R-net (R = --radius) and rerun the spectral pipeline on it.
    Net(Common),
    /// Merge JSON reports into one document.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. `cyclic:4,8`, `torus:d=2:3,4`, `sl2:3,5`, `box:cyclic:2,4,8`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    radius: Option<u32>,
    /// Comma-separated exponents, e.g. `1.5,2,3`.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load the space instead of generating it (needs --system).
    #[arg(long, requires = "system")]
    space: Option<PathBuf>,
    #[arg(long, requires = "space")]
    system: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = read(path)?;
                RunConfig::from_text(&text).with_context(|| format!("config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUT_ENV) {
            cfg.out = PathBuf::from(dir);
        }
        if let Some(v) = &self.family {
            cfg.family = v.clone();
        }
        if let Some(v) = self.radius {
            cfg.radius = v;
        }
        if let Some(v) = &self.p {
            cfg.p_values = v.clone();
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.kmax {
            cfg.k_max = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if self.space.is_some() && cfg.family.trim().is_empty() {
            cfg.family = "loaded".into();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn family(&self, cfg: &RunConfig) -> Result<Family> {
        match (&self.space, &self.system) {
            (Some(space), Some(system)) => {
                let mut fam = pipeline::load_family(&read(space)?, &read(system)?)?;
                if cfg.radius > 1 {
                    fam.system = fam.system.raise(&fam.space, cfg.radius as usize)?;
                }
                Ok(fam)
            }
            _ => Ok(pipeline::build_family(cfg)?),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_doc(dir: &Path, doc: &ReportDocument) -> Result<()> {
    write(dir, &format!("{}.json", doc.command), &doc.to_json())
}

fn print_spectral(report: &kazhdan_core::spectral::SpectralReport) {
    println!("component  size   lambda          S_bound         c_bound         flag");
    for c in &report.components {
        println!(
            "{:>9}  {:>5}  {:<14}  {:<14}  {:<14}  {}",
            c.component,
            c.size,
            fmt_g(c.lambda()),
            fmt_g(c.s_bound),
            fmt_g(c.c_bound),
            c.flag()
        );
    }
    println!("{}", report.verdict);
}

fn run(cli: Cli) -> Result<bool> {
    let doc = match cli.command {
        Command::Generate(common) => {
            let cfg = common.config()?;
            let out = pipeline::run_generate(&cfg)?;
            write(&cfg.out, "space.txt", &out.space_text)?;
            write(&cfg.out, "system.txt", &out.system_text)?;
            print!("{}", out.table);
            write_doc(&cfg.out, &out.doc)?;
            out.doc
        }
        Command::Gap(common) => gap(&common, false)?,
        Command::Kazhdan(common) => gap(&common, true)?,
        Command::Decompose { common, pt } => {
            let cfg = common.config()?;
            let fam = common.family(&cfg)?;
            let given = match &pt {
                Some(path) => Some(
                    PartialTranslation::from_text(&fam.space, &read(path)?)
                        .with_context(|| format!("partial translation {}", path.display()))?,
                ),
                None => None,
            };
            let out = pipeline::run_decompose(&cfg, &fam, given.as_ref())?;
            if let Some(text) = &out.decomp_text {
                write(&cfg.out, "decomp.txt", text)?;
            }
            println!("{}", out.summary.line());
            write_doc(&cfg.out, &out.doc)?;
            out.doc
        }
        Command::Mazur(common) => {
            let cfg = common.config()?;
            let fam = common.family(&cfg)?;
            let out = pipeline::run_mazur(&cfg, &fam)?;
            write(&cfg.out, "mazur.csv", &out.csv)?;
            let failed = out.rows.iter().filter(|r| r.pass == Some(false)).count();
            let asserted = out.rows.iter().filter(|r| r.pass.is_some()).count();
            println!("mazur: {}/{} assertion rows pass", asserted - failed, asserted);
            if let Some(s) = out.slope {
                println!("C0 defect log-log slope in k: {}", fmt_g(s));
            }
            write_doc(&cfg.out, &out.doc)?;
            out.doc
        }
        Command::Net(common) => {
            let cfg = common.config()?;
            let fam = common.family(&cfg)?;
            let out = pipeline::run_net(&cfg, &fam)?;
            write(&cfg.out, "net_space.txt", &out.net_space_text)?;
            write(&cfg.out, "net_spectral.csv", &out.gap.csv)?;
            print_spectral(&out.gap.report);
            write_doc(&cfg.out, &out.gap.doc)?;
            out.gap.doc
        }
        Command::Report { inputs, out } => {
            if inputs.is_empty() {
                bail!("report needs at least one input document");
            }
            let docs = inputs
                .iter()
                .map(|p| Ok(ReportDocument::from_json(&read(p)?).with_context(|| format!("report {}", p.display()))?))
                .collect::<Result<Vec<_>>>()?;
            let merged = ReportDocument::merge(&docs)?;
            let dir = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| RunConfig::default().out);
            write_doc(&dir, &merged)?;
            merged
        }
    };
    println!("determinism hash: {}", doc.determinism_hash);
    println!("{}", if doc.passed { "PASS" } else { "FAIL" });
    Ok(doc.passed)
}

fn gap(common: &Common, kazhdan: bool) -> Result<ReportDocument> {
    let cfg = common.config()?;
    let fam = common.family(&cfg)?;
    let out = pipeline::run_gap(&cfg, &fam, kazhdan)?;
    write(&cfg.out, "spectral.csv", &out.csv)?;
    if let Some(table) = &out.kazhdan_csv {
        write(&cfg.out, "kazhdan.csv", table)?;
    }
    print_spectral(&out.report);
    write_doc(&cfg.out, &out.doc)?;
    Ok(out.doc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
