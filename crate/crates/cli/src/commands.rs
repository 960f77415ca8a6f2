//! Subcommands and their argument types.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use osyan::{
    analyze, bench_family, gen_random_acyclic, gen_scaling_family, run_algo, Algo, Boolean, Counting, Dictionary, EvalStats,
    RandomAnnotation, RunConfig, Semiring, SemiringKind, Shape, Tropical, DEFAULT_ALPHA,
};
use serde::Serialize;
use thiserror::Error;

use crate::csvio::{ingest_csv, write_database, write_relation};
use crate::dsl::QuerySpec;

/// Bad flags or flag combinations; exits with status 1.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// File name of the query in directories written by `gen`.
pub const QUERY_FILE: &str = "query.cq";

#[derive(Debug, Parser)]
#[command(name = "osyan", version, about = "Output-sensitive evaluation of acyclic conjunctive queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural report: acyclicity, reduction, components and widths.
    Analyze(AnalyzeArgs),
    /// Evaluate a query over a directory of CSV files.
    Eval(EvalArgs),
    /// Fit intermediate-size exponents over a scaling family.
    Bench(BenchArgs),
    /// Write a generated instance as a query file plus CSV data.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub query: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub query: PathBuf,
    /// Directory holding one `<atom>.csv` per atom.
    pub data: PathBuf,
    #[arg(long, default_value = "genyan")]
    pub algo: Algo,
    /// Fixed heavy/light threshold instead of doubling.
    #[arg(long)]
    pub delta: Option<u64>,
    /// Per-round tuple-operation budget factor for doubling.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Answer CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Counter report as JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// pathK, starL, fig1 or fig1-drawn.
    #[arg(long)]
    pub shape: Shape,
    /// Target |OUT| values; powers of two from 16 to 4096 by default.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "yannakakis,genyan,path")]
    pub algos: Vec<Algo>,
    /// Fixed input size.
    #[arg(long, default_value_t = 20_000)]
    pub d_size: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long)]
    pub delta: Option<u64>,
    /// Report JSON; a summary goes to stdout either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["shape", "seed"])))]
pub struct GenArgs {
    /// Output directory.
    pub dir: PathBuf,
    /// Scaling-family shape; needs --out-size.
    #[arg(long, requires = "out_size")]
    pub shape: Option<Shape>,
    #[arg(long, default_value_t = 2_000)]
    pub d_size: usize,
    #[arg(long)]
    pub out_size: Option<u64>,
    /// Random acyclic instance with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub atoms: usize,
    #[arg(long, default_value_t = 6)]
    pub domain: u32,
    #[arg(long, default_value_t = 0.5)]
    pub free_fraction: f64,
    /// Annotation semiring of a random instance.
    #[arg(long, default_value = "boolean")]
    pub semiring: SemiringKind,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Gen(a) => cmd_gen(&a),
    }
}

fn load_spec(path: &Path) -> Result<QuerySpec> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    QuerySpec::parse(&text).with_context(|| format!("{}", path.display()))
}

fn check_knobs(delta: Option<u64>, alpha: f64) -> Result<()> {
    if delta == Some(0) {
        return Err(UsageError("--delta must be at least 1".into()).into());
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(UsageError("--alpha must be a positive number".into()).into());
    }
    Ok(())
}

/// Writes to `path`, or stdout when `None`.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            body(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema: u32,
    query: String,
    semiring: SemiringKind,
    #[serde(flatten)]
    analysis: osyan::Analysis,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let spec = load_spec(&args.query)?;
    let analysis = analyze(&spec.query)?;
    if args.json {
        let report = AnalyzeReport { schema: 1, query: spec.query.to_string(), semiring: spec.semiring, analysis };
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
    println!("query:       {}", spec.query);
    println!("acyclic:     {}", analysis.acyclic);
    println!("free-connex: {}", analysis.free_connex.map_or("-".to_string(), |b| b.to_string()));
    println!("reduced:     {}", analysis.reduced.as_deref().unwrap_or("-"));
    println!("components:  {}", analysis.components.len());
    for c in &analysis.components {
        println!("  {c}");
    }
    println!("wout:        {}", opt(analysis.projection_width));
    println!("freew:       {}", opt(analysis.free_width));
    Ok(())
}

/// Counter report written by `eval --stats`.
#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub schema: u32,
    pub algo: Algo,
    pub semiring: SemiringKind,
    pub input_size: usize,
    pub output_size: usize,
    pub max_intermediate: u64,
    pub total_intermediate: u64,
    pub tuple_ops: u64,
    pub doubling_rounds: u32,
    pub per_node_sizes: BTreeMap<String, u64>,
    pub delta_final: Option<u64>,
    pub fallback: bool,
    pub bound_checks: u64,
    pub bound_violations: u64,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    check_knobs(args.delta, args.alpha)?;
    let spec = load_spec(&args.query)?;
    match spec.semiring {
        SemiringKind::Boolean => eval_typed::<Boolean>(&spec, args),
        SemiringKind::Counting => eval_typed::<Counting>(&spec, args),
        SemiringKind::Tropical => eval_typed::<Tropical>(&spec, args),
    }
}

fn eval_typed<S: Semiring>(spec: &QuerySpec, args: &EvalArgs) -> Result<()> {
    let q = &spec.query;
    let mut dict = Dictionary::new();
    let ingested = ingest_csv::<S>(&args.data, q, &mut dict)?;
    for w in &ingested.warnings {
        log::warn!("{w}");
    }
    let db = ingested.database;
    if args.delta.is_some() && matches!(args.algo, Algo::Yannakakis | Algo::Oracle) {
        log::warn!("--delta has no effect with --algo {}", args.algo);
    }
    let mut stats = EvalStats::new();
    let cfg = RunConfig { delta: args.delta, alpha: args.alpha };
    let answer = run_algo(args.algo, q, &db, cfg, &mut stats)?;
    emit(args.out.as_deref(), |w| Ok(write_relation(w, q, &spec.head, &answer, |v| dict.decode(v).to_string())?))?;
    if let Some(path) = &args.stats {
        let report = StatsReport {
            schema: 1,
            algo: args.algo,
            semiring: S::KIND,
            input_size: db.size_for(q)?,
            output_size: answer.len(),
            max_intermediate: stats.max_intermediate,
            total_intermediate: stats.total_intermediate,
            tuple_ops: stats.tuple_ops,
            doubling_rounds: stats.doubling_rounds,
            per_node_sizes: stats.per_node_sizes,
            delta_final: stats.delta_final,
            fallback: stats.fallback,
            bound_checks: stats.bound_checks,
            bound_violations: stats.bound_violations,
        };
        emit(Some(path), |w| Ok(serde_json::to_writer_pretty(&mut *w, &report).map(|_| writeln!(w))??))?;
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    check_knobs(args.delta, args.alpha)?;
    if args.algos.is_empty() {
        return Err(UsageError("--algos needs at least one algorithm".into()).into());
    }
    let grid: Vec<u64> = if args.grid.is_empty() { (4..=12).map(|e| 1u64 << e).collect() } else { args.grid.clone() };
    let cfg = RunConfig { delta: args.delta, alpha: args.alpha };
    let report = bench_family(args.shape, args.d_size, &grid, &args.algos, cfg)?;
    for s in &report.skipped {
        log::warn!("skipped {s}");
    }
    println!("{} at |D| ≈ {}, {} points", report.shape, report.d_size, report.points.len());
    for p in &report.points {
        let cols: Vec<String> = p.runs.iter().map(|r| format!("{}={}", r.algo, r.max_intermediate)).collect();
        println!("  |OUT| = {:>8}  |D| = {:>8}  max_intermediate: {}", p.out, p.input_size, cols.join(" "));
    }
    for f in &report.fits {
        println!("  {:<10} slope {:.3}  r² {:.3}", f.algo.name(), f.fit.slope, f.fit.r_squared);
    }
    if let Some(path) = &args.out {
        emit(Some(path), |w| Ok(serde_json::to_writer_pretty(&mut *w, &report).map(|_| writeln!(w))??))?;
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    if let Some(shape) = args.shape {
        let out = args.out_size.expect("clap enforces --out-size");
        let (mut family, skipped) = gen_scaling_family::<Boolean>(shape, args.d_size, &[out]);
        let Some(inst) = family.pop() else {
            return Err(UsageError(format!("cannot generate {shape}: {}", skipped.join("; "))).into());
        };
        write_instance(&args.dir, QuerySpec::from_query(inst.query.clone(), SemiringKind::Boolean), &inst.database)?;
        println!("{}: |D| = {}, |OUT| = {}", inst.label, inst.size(), inst.out);
        return Ok(());
    }
    let seed = args.seed.expect("clap enforces --shape or --seed");
    match args.semiring {
        SemiringKind::Boolean => gen_random::<Boolean>(args, seed),
        SemiringKind::Counting => gen_random::<Counting>(args, seed),
        SemiringKind::Tropical => gen_random::<Tropical>(args, seed),
    }
}

fn gen_random<S: RandomAnnotation>(args: &GenArgs, seed: u64) -> Result<()> {
    let (q, db) = gen_random_acyclic::<S>(seed, args.atoms, args.domain, args.free_fraction);
    println!("{q}");
    write_instance(&args.dir, QuerySpec::from_query(q, S::KIND), &db)
}

fn write_instance<S: Semiring>(dir: &Path, spec: QuerySpec, db: &osyan::Database<S>) -> Result<()> {
    write_database(dir, &spec.query, db)?;
    fs::write(dir.join(QUERY_FILE), spec.to_string())?;
    Ok(())
}
