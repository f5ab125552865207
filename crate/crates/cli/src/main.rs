//! One binary for the whole loop: `ingest` compacts an N-Triples dump,
//! `fit` estimates growth parameters from the edge stream, `generate`
//! synthesizes graphs, `theory` prints the closed-form laws, `evaluate`
//! compares data, simulation and theory, and `pipeline` chains ingest,
//! fit and ablation over one dump.
//!
//! Exit codes: 0 on success, 1 on any domain or I/O error (the message
//! quotes the violated constraint), 2 on usage errors.

mod manifest;

use std::fs::File;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgsynth_core::edges::{EDGES_FILE, EdgeReader, RELATIONSHIP_DICT_FILE, Role, read_dictionary};
use kgsynth_core::error::{Error, Result};
use kgsynth_core::evaluate::{
    ablate, overlay_experiment, telemetry_checks, telemetry_study, write_divergence_csv,
    write_divergence_seeds_csv, write_longitudinal_csv, write_overlay_csv,
};
use kgsynth_core::generate::{
    GenerationConfig, GenerationEngine, SimulationTelemetry, TELEMETRY_FILE, engine, engine_names,
    generate_to_dir,
};
use kgsynth_core::ingest::{DegreeTables, IngestFilter, IngestOptions, ingest_to_dir, scan_degrees};
use kgsynth_core::rng::DEFAULT_SEED;
use kgsynth_core::stats::{Analysis, GraphSummary, RelationshipProfile, analyze, build_histograms};
use kgsynth_core::{DegreeHistogram, csv_float, theory};
use manifest::ManifestBuilder;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "kgsynth",
    version,
    about = "Multiplex knowledge-graph toolkit: dump statistics, synthesis, closed-form laws"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads for parallel sections; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// RNG seed: an unsigned integer, or "random" to draw one from the OS.
    /// Unset means the fixed default seed, so runs repeat by default
    #[arg(long, global = true)]
    seed: Option<String>,

    /// Output directory; `theory heatmap` treats it as the CSV file path
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Log filter: off, error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// JSON model config for `generate` and `evaluate telemetry`; explicit
    /// flags override values from the file. A previous run manifest also
    /// works here, replaying its recorded config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compact an N-Triples dump into binary edges plus dictionaries
    Ingest(IngestArgs),
    /// Estimate growth parameters from an ingested edge directory
    Fit(FitArgs),
    /// Generate a synthetic graph from a model config
    Generate(GenerateArgs),
    /// Closed-form laws of the growth model
    Theory {
        #[command(subcommand)]
        command: TheoryCommand,
    },
    /// Compare real data, regenerated graphs and closed forms
    Evaluate {
        #[command(subcommand)]
        command: EvaluateCommand,
    },
    /// Chain ingest, fit and ablation over one dump
    Pipeline(PipelineArgs),
}

#[derive(Args, Serialize)]
struct IngestArgs {
    /// N-Triples file, plain or gzip
    #[arg(long)]
    input: PathBuf,
    /// IRI prefix marking internal entities; blank nodes always count
    #[arg(long)]
    prefix: String,
    /// Drop repeated identical facts instead of keeping them
    #[arg(long)]
    dedup: bool,
    /// Keep only these predicate IRIs (repeatable); default keeps all
    #[arg(long = "keep-predicate", value_name = "IRI")]
    keep_predicates: Vec<String>,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Directory produced by `ingest` or `generate`
    #[arg(long)]
    edges: PathBuf,
    /// Which fact end to profile
    #[arg(long, value_enum, default_value_t = RoleArg::Both)]
    role: RoleArg,
    /// Relationship groups per degree pass; higher trades speed for memory.
    /// Estimates are identical for any value
    #[arg(long, default_value_t = 1)]
    groups: u32,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    /// Generation engine
    #[arg(long, default_value = "direct")]
    engine: String,
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Relationship-count distribution P(r) as CSV on stdout
    Pr(PrArgs),
    /// Misdescribed-entity proportion over an (n, sigma) grid
    Heatmap(HeatmapArgs),
}

#[derive(Args, Serialize)]
struct PrArgs {
    /// Number of relationships
    #[arg(long)]
    n: u32,
    /// Superficiality in (0, 1]
    #[arg(long)]
    sigma: f64,
}

#[derive(Args, Serialize)]
struct HeatmapArgs {
    /// Relationship counts as lo:hi or lo:hi:step
    #[arg(long = "n-range")]
    n_range: String,
    /// Superficiality values as lo:hi:step or a single value
    #[arg(long = "sigma-range")]
    sigma_range: String,
    /// Entities attached to at most this many relationships count as
    /// misdescribed
    #[arg(long, default_value_t = 3)]
    r: u32,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Regenerate at reduced scale under each model variant and rank them
    /// by divergence from the real degree distribution
    Ablate(AblateArgs),
    /// Degree and relationship-count distributions of the 25-relationship
    /// reference model at one superficiality, empirical against closed form
    Overlay(OverlayArgs),
    /// Check simulation telemetry against the growth laws over many seeds
    Telemetry(TelemetryArgs),
    /// Tabulate fitted summaries of several snapshots side by side
    Longitudinal(LongitudinalArgs),
}

#[derive(Args, Serialize)]
struct AblateArgs {
    /// Directory produced by `fit`
    #[arg(long)]
    stats: PathBuf,
    /// Regenerated steps as a fraction of the real fact count
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    /// Seeds per variant, derived from the base seed
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Which fact end to compare
    #[arg(long, value_enum, default_value_t = RoleArg::Both)]
    role: RoleArg,
    /// Generation engine
    #[arg(long, default_value = "direct")]
    engine: String,
}

#[derive(Args, Serialize)]
struct OverlayArgs {
    /// Superficiality of the reference model
    #[arg(long)]
    sigma: f64,
    /// Timeline steps
    #[arg(long, default_value_t = 2_000_000)]
    steps: u64,
    /// Generation engine
    #[arg(long, default_value = "direct")]
    engine: String,
}

#[derive(Args, Serialize)]
struct TelemetryArgs {
    /// Directory of prior `generate` runs, one subdirectory each; omitted
    /// means simulate in process from --config
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Seeds to simulate in process, derived from the base seed
    #[arg(long, default_value_t = 30)]
    seeds: u32,
    /// Allowed relative error of the entity-growth variance
    #[arg(long, default_value_t = 0.25)]
    variance_tolerance: f64,
    /// Generation engine for in-process runs
    #[arg(long, default_value = "direct")]
    engine: String,
}

#[derive(Args, Serialize)]
struct LongitudinalArgs {
    /// Fit directories, each optionally prefixed as LABEL=DIR; a bare DIR
    /// is labeled by its final path component
    #[arg(value_name = "SNAPSHOT", required = true)]
    snapshots: Vec<String>,
}

#[derive(Args, Serialize)]
struct PipelineArgs {
    /// N-Triples file, plain or gzip
    #[arg(long)]
    input: PathBuf,
    /// IRI prefix marking internal entities
    #[arg(long)]
    prefix: String,
    /// Drop repeated identical facts
    #[arg(long)]
    dedup: bool,
    /// Keep only these predicate IRIs (repeatable)
    #[arg(long = "keep-predicate", value_name = "IRI")]
    keep_predicates: Vec<String>,
    /// Relationship groups per degree pass in the fit stage
    #[arg(long, default_value_t = 1)]
    groups: u32,
    /// Ablation scale as a fraction of the real fact count
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    /// Ablation seeds per variant
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Which fact end to fit and compare
    #[arg(long, value_enum, default_value_t = RoleArg::Both)]
    role: RoleArg,
    /// Generation engine for the ablation stage
    #[arg(long, default_value = "direct")]
    engine: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RoleArg {
    Out,
    In,
    Both,
}

impl RoleArg {
    fn roles(self) -> &'static [Role] {
        match self {
            RoleArg::Out => &[Role::Out],
            RoleArg::In => &[Role::In],
            RoleArg::Both => &[Role::Out, Role::In],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.global.log_level)
        .format_timestamp(None)
        .try_init()
        .ok();
    if cli.global.threads > 0 {
        // A second build_global in the same process is harmless: the pool
        // is already sized, which is what tests exercising run() rely on.
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
            .ok();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let global = &cli.global;
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(args, out_dir(global)?),
        Command::Fit(args) => cmd_fit(args, out_dir(global)?),
        Command::Generate(args) => cmd_generate(args, global, out_dir(global)?),
        Command::Theory { command: TheoryCommand::Pr(args) } => cmd_theory_pr(args),
        Command::Theory { command: TheoryCommand::Heatmap(args) } => cmd_theory_heatmap(args, global),
        Command::Evaluate { command } => match command {
            EvaluateCommand::Ablate(args) => cmd_ablate(args, global, out_dir(global)?),
            EvaluateCommand::Overlay(args) => cmd_overlay(args, global, out_dir(global)?),
            EvaluateCommand::Telemetry(args) => cmd_telemetry(args, global, out_dir(global)?),
            EvaluateCommand::Longitudinal(args) => cmd_longitudinal(args, out_dir(global)?),
        },
        Command::Pipeline(args) => cmd_pipeline(args, global, out_dir(global)?),
    }
}

fn out_dir(global: &Global) -> Result<&Path> {
    global
        .out
        .as_deref()
        .ok_or_else(|| Error::config("--out DIR is required for this command"))
}

/// Flag beats config file beats the fixed default.
fn resolve_seed(flag: Option<&str>, from_config: Option<u64>) -> Result<u64> {
    match flag {
        Some("random") => Ok(rand::random()),
        Some(text) => text
            .parse()
            .map_err(|_| Error::config(format!("--seed takes an unsigned integer or \"random\", got {text:?}"))),
        None => Ok(from_config.unwrap_or(DEFAULT_SEED)),
    }
}

fn configured_engine(name: &str) -> Result<&'static dyn GenerationEngine> {
    engine(name).map_err(|_| {
        Error::config(format!("unknown engine {name:?}; expected one of {:?}", engine_names()))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn cmd_ingest(args: &IngestArgs, out: &Path) -> Result<()> {
    let mut filter = IngestFilter::new(&args.prefix);
    if !args.keep_predicates.is_empty() {
        filter.keep_predicates = Some(args.keep_predicates.iter().cloned().collect());
    }
    let opts = IngestOptions { dedup: args.dedup, ..IngestOptions::default() };
    let summary = ingest_to_dir(&args.input, &filter, &opts, out)?;

    let mut m = ManifestBuilder::new("ingest", args, None)?;
    m.input(&args.input)?;
    m.write(out)?;

    println!("ingested {} facts over {} entities into {}", summary.facts, summary.entities, out.display());
    println!(
        "removed: {} literal, {} external, {} malformed, {} duplicate, {} filtered-predicate",
        summary.literals_removed,
        summary.external_removed,
        summary.malformed,
        summary.duplicates_removed,
        summary.predicates_removed
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs, out: &Path) -> Result<()> {
    let edges_path = args.edges.join(EDGES_FILE);
    let dict_path = args.edges.join(RELATIONSHIP_DICT_FILE);
    let names = read_dictionary(&dict_path).ok();

    let mut out_tables: Option<DegreeTables> = None;
    let mut in_tables: Option<DegreeTables> = None;
    for &role in args.role.roles() {
        let tables = scan_degrees(|| EdgeReader::open(&edges_path), role, args.groups)?;
        match role {
            Role::Out => out_tables = Some(tables),
            Role::In => in_tables = Some(tables),
        }
    }
    let analysis = analyze(out_tables.as_ref(), in_tables.as_ref(), names.as_deref())?;

    std::fs::create_dir_all(out)?;
    write_json(&out.join("profiles.json"), &analysis.profiles)?;
    write_json(&out.join("summary.json"), &analysis.summary)?;
    for tables in [out_tables.as_ref(), in_tables.as_ref()].into_iter().flatten() {
        let label = tables.role.label();
        let (per_rel, global_hist) = build_histograms(tables);
        for (rel, hist) in &per_rel {
            hist.write_csv(create(&out.join(format!("hist_{label}_{rel}.csv")))?)?;
        }
        global_hist.write_csv(create(&out.join(format!("hist_{label}_global.csv")))?)?;
    }

    let mut m = ManifestBuilder::new("fit", args, None)?;
    m.input(&edges_path)?;
    if names.is_some() {
        m.input(&dict_path)?;
    }
    m.write(out)?;

    for &role in args.role.roles() {
        if let Some(rs) = analysis.summary.role(role) {
            println!(
                "{}: {} entities, sigma {:.6}, new-entity rate a {:.6}, closed form {}",
                role.label(),
                rs.entities,
                rs.sigma,
                rs.a,
                if rs.distribution_defined { "defined" } else { "undefined" }
            );
        }
    }
    println!("profiles for {} relationships written to {}", analysis.profiles.len(), out.display());
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, global: &Global, out: &Path) -> Result<()> {
    let config_path = global
        .config
        .as_deref()
        .ok_or_else(|| Error::config("generate needs --config MODEL.json"))?;
    let mut cfg: GenerationConfig = serde_json::from_value(manifest::load_config_value(config_path)?)?;
    let seed = resolve_seed(global.seed.as_deref(), cfg.seed)?;
    cfg.seed = Some(seed);
    let eng = configured_engine(&args.engine)?;

    let outcome = generate_to_dir(&cfg, seed, eng.name(), out)?;

    // The manifest's config field replays as-is through --config; the
    // engine key rides along and is ignored by the model deserializer.
    let mut config_value = serde_json::to_value(&cfg)?;
    config_value["engine"] = serde_json::Value::String(eng.name().to_string());
    let mut m = ManifestBuilder::new("generate", &config_value, Some(seed))?;
    m.input(config_path)?;
    m.write(out)?;

    println!(
        "generated {} facts over {} entities in {} steps ({} exceptional) into {}",
        outcome.facts,
        outcome.registry.len(),
        cfg.steps,
        outcome.exceptional,
        out.display()
    );
    Ok(())
}

fn cmd_theory_pr(args: &PrArgs) -> Result<()> {
    let d = theory::relationship_count_distribution(args.n, args.sigma)?;
    let mut w = csv::Writer::from_writer(io::stdout());
    w.write_record(["r", "P_r"]).map_err(Error::from)?;
    for (i, &p) in d.probabilities().iter().enumerate() {
        w.write_record([(i + 1).to_string(), csv_float(p)]).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_theory_heatmap(args: &HeatmapArgs, global: &Global) -> Result<()> {
    let ns = parse_n_range(&args.n_range)?;
    let sigmas = parse_sigma_range(&args.sigma_range)?;
    let cells = theory::heatmap_grid(&ns, &sigmas, args.r);

    let csv_path = global.out.clone().unwrap_or_else(|| PathBuf::from("grid.csv"));
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    w.write_record(["n", "sigma", "value", "defined"]).map_err(Error::from)?;
    let mut undefined = 0u64;
    for cell in &cells {
        let (value, defined) = match cell.value {
            Some(v) => (csv_float(v), "true"),
            None => {
                undefined += 1;
                (String::new(), "false")
            }
        };
        w.write_record([cell.n.to_string(), csv_float(cell.sigma), value, defined.to_string()])
            .map_err(Error::from)?;
    }
    w.flush()?;
    drop(w);

    let manifest_dir = csv_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    ManifestBuilder::new("theory heatmap", args, None)?.write(manifest_dir)?;

    println!("{} cells ({} undefined) written to {}", cells.len(), undefined, csv_path.display());
    Ok(())
}

/// "lo:hi" or "lo:hi:step", inclusive.
fn parse_n_range(text: &str) -> Result<Vec<u32>> {
    let bad = || Error::config(format!("bad n range {text:?}; expected lo:hi or lo:hi:step"));
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| s.parse::<u32>().map_err(|_| bad());
    let (lo, hi, step) = match parts.as_slice() {
        [lo, hi] => (parse(lo)?, parse(hi)?, 1),
        [lo, hi, step] => (parse(lo)?, parse(hi)?, parse(step)?),
        _ => return Err(bad()),
    };
    if step == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step as usize).collect())
}

/// "lo:hi:step" inclusive up to float slack, or a single value.
fn parse_sigma_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::config(format!("bad sigma range {text:?}; expected lo:hi:step or a value"));
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(bad());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| lo + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn load_analysis(stats: &Path) -> Result<Analysis> {
    let profiles: Vec<RelationshipProfile> = read_json(&stats.join("profiles.json"))?;
    let summary: GraphSummary = read_json(&stats.join("summary.json"))?;
    Ok(Analysis { profiles, summary })
}

fn cmd_ablate(args: &AblateArgs, global: &Global, out: &Path) -> Result<()> {
    let analysis = load_analysis(&args.stats)?;
    let eng = configured_engine(&args.engine)?;

    let mut hists: Vec<(Role, DegreeHistogram, PathBuf)> = Vec::new();
    for &role in args.role.roles() {
        let path = args.stats.join(format!("hist_{}_global.csv", role.label()));
        if analysis.summary.role(role).is_some() && path.exists() {
            hists.push((role, DegreeHistogram::read_csv(File::open(&path)?)?, path));
        }
    }
    if hists.is_empty() {
        return Err(Error::config(format!(
            "no fitted role in {} matches --role {:?}",
            args.stats.display(),
            args.role
        )));
    }

    let base_seed = resolve_seed(global.seed.as_deref(), None)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| base_seed.wrapping_add(i)).collect();
    let real: Vec<(Role, &DegreeHistogram)> = hists.iter().map(|(r, h, _)| (*r, h)).collect();
    let report = ablate(&analysis, &real, args.scale, &seeds, eng)?;

    std::fs::create_dir_all(out)?;
    write_divergence_csv(&report, create(&out.join("divergence.csv"))?)?;
    write_divergence_seeds_csv(&report, create(&out.join("divergence_seeds.csv"))?)?;

    let mut m = ManifestBuilder::new("evaluate ablate", args, Some(base_seed))?;
    m.input(&args.stats.join("profiles.json"))?;
    m.input(&args.stats.join("summary.json"))?;
    for (_, _, path) in &hists {
        m.input(path)?;
    }
    m.write(out)?;

    for row in &report.means {
        println!("{:<18} {:<3} mean kl {:.6}", row.variant, row.role.label(), row.kl);
    }
    for (role, _, _) in &hists {
        if let Some((best, gap)) = report.best_variant(*role) {
            println!("best {} variant: {best} (margin {gap:.6} over runner-up)", role.label());
        }
    }
    Ok(())
}

fn cmd_overlay(args: &OverlayArgs, global: &Global, out: &Path) -> Result<()> {
    let eng = configured_engine(&args.engine)?;
    let seed = resolve_seed(global.seed.as_deref(), None)?;
    let result = overlay_experiment(args.sigma, args.steps, seed, eng)?;

    std::fs::create_dir_all(out)?;
    let name = format!("overlay_sigma{}.csv", args.sigma);
    write_overlay_csv(&result, create(&out.join(&name))?)?;
    ManifestBuilder::new("evaluate overlay", args, Some(seed))?.write(out)?;

    println!(
        "sigma {}: relationship-count TV {:.6}, modal r {} empirical vs {} closed form; {} written",
        args.sigma, result.tv, result.argmax_empirical, result.argmax_theory, name
    );
    Ok(())
}

/// Subdirectories of `dir` that hold a telemetry series, sorted by name.
fn collect_runs(dir: &Path) -> Result<(GenerationConfig, Vec<SimulationTelemetry>)> {
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.join(TELEMETRY_FILE).exists())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::config(format!(
            "no run subdirectory under {} contains {TELEMETRY_FILE}",
            dir.display()
        )));
    }
    let mut runs = Vec::with_capacity(subdirs.len());
    let mut cfg: Option<GenerationConfig> = None;
    for sub in &subdirs {
        runs.push(SimulationTelemetry::read_csv(BufReader::new(File::open(sub.join(TELEMETRY_FILE))?))?);
        let manifest_path = sub.join(manifest::RUN_MANIFEST_FILE);
        if cfg.is_none() && manifest_path.exists() {
            cfg = Some(serde_json::from_value(manifest::load_config_value(&manifest_path)?)?);
        }
    }
    let cfg = cfg.ok_or_else(|| {
        Error::config(format!("no {} under {} to recover the model config", manifest::RUN_MANIFEST_FILE, dir.display()))
    })?;
    Ok((cfg, runs))
}

fn cmd_telemetry(args: &TelemetryArgs, global: &Global, out: &Path) -> Result<()> {
    let (report, seed) = if let Some(runs_dir) = &args.runs {
        let (cfg, runs) = collect_runs(runs_dir)?;
        (telemetry_checks(&cfg, &runs, args.variance_tolerance)?, None)
    } else {
        let config_path = global
            .config
            .as_deref()
            .ok_or_else(|| Error::config("evaluate telemetry needs --runs DIR or --config MODEL.json"))?;
        let cfg: GenerationConfig = serde_json::from_value(manifest::load_config_value(config_path)?)?;
        let eng = configured_engine(&args.engine)?;
        let base_seed = resolve_seed(global.seed.as_deref(), cfg.seed)?;
        let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| base_seed.wrapping_add(i)).collect();
        (telemetry_study(&cfg, &seeds, eng, args.variance_tolerance)?, Some(base_seed))
    };

    std::fs::create_dir_all(out)?;
    write_json(&out.join("telemetry_report.json"), &report)?;
    ManifestBuilder::new("evaluate telemetry", args, seed)?.write(out)?;

    let failed = report.checks.iter().filter(|c| !c.pass).count();
    for check in &report.checks {
        let verdict = if check.pass { "ok" } else { "FAIL" };
        println!(
            "{verdict:<4} {}: observed {:.6}, expected {:.6} within {:.6}",
            check.law, check.observed, check.expected, check.band
        );
    }
    println!(
        "{} of {} law checks hold over {} runs ({})",
        report.checks.len() - failed,
        report.checks.len(),
        report.seeds,
        if report.pass { "pass" } else { "fail" }
    );
    Ok(())
}

fn cmd_longitudinal(args: &LongitudinalArgs, out: &Path) -> Result<()> {
    let mut items = Vec::new();
    let mut inputs = Vec::new();
    for snapshot in &args.snapshots {
        let (label, dir) = match snapshot.split_once('=') {
            Some((label, dir)) => (label.to_string(), PathBuf::from(dir)),
            None => {
                let dir = PathBuf::from(snapshot);
                let label = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .ok_or_else(|| Error::config(format!("cannot label snapshot {snapshot:?}; use LABEL=DIR")))?;
                (label, dir)
            }
        };
        let path = dir.join("summary.json");
        items.push((label, read_json::<GraphSummary>(&path)?));
        inputs.push(path);
    }

    let rows = kgsynth_core::evaluate::longitudinal_rows(&items);
    std::fs::create_dir_all(out)?;
    write_longitudinal_csv(&rows, create(&out.join("longitudinal.csv"))?)?;

    let mut m = ManifestBuilder::new("evaluate longitudinal", args, None)?;
    for path in &inputs {
        m.input(path)?;
    }
    m.write(out)?;

    println!("{} role rows over {} snapshots written to longitudinal.csv", rows.len(), items.len());
    Ok(())
}

fn cmd_pipeline(args: &PipelineArgs, global: &Global, out: &Path) -> Result<()> {
    let ingest_dir = out.join("ingest");
    let fit_dir = out.join("fit");
    let ablate_dir = out.join("ablate");

    cmd_ingest(
        &IngestArgs {
            input: args.input.clone(),
            prefix: args.prefix.clone(),
            dedup: args.dedup,
            keep_predicates: args.keep_predicates.clone(),
        },
        &ingest_dir,
    )?;
    cmd_fit(&FitArgs { edges: ingest_dir, role: args.role, groups: args.groups }, &fit_dir)?;
    cmd_ablate(
        &AblateArgs {
            stats: fit_dir,
            scale: args.scale,
            seeds: args.seeds,
            role: args.role,
            engine: args.engine.clone(),
        },
        global,
        &ablate_dir,
    )?;
    Ok(())
}
