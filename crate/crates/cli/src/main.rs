//! `mmph`: build and query monotone hash structures, print space and bound
//! reports, and drive the coloring and random-process labs.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 budget exceeded.

mod config;
mod input;
mod output;

use std::collections::BTreeSet;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mmphf_core::coloring_lab::{bound_report, min_family_size, ColorSource, Universe};
use mmphf_core::process_lab::{
    abnormal_last_block_probability, census_points, chunk_rng, density_profile, encoding_probability, make_params,
    reachability_census, Census, Estimate, Mode, ProcessParams,
};
use mmphf_core::{MonotoneHash, Regime, SortedKeySet};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use config::{Config, Format, SEED_ENV};
use input::{load_coloring, parse_universe, read_keys, KeyFormat};
use output::{num, write_csv, write_json, Header};

/// A command-line mistake (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn ratio_to_string(r: &num_rational::BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Parser, Debug)]
#[command(name = "mmph", version, about = "Monotone minimal perfect hashing and lower-bound labs")]
struct Cli {
    /// `key = value` settings file, applied before flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (default from MMPH_SEED, then the config file).
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for Monte Carlo sampling.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides any config key, e.g. `--set max_outcomes=1000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a structure from a sorted key file and write it to disk.
    Build(BuildArgs),
    /// Print the rank of each query point, one line per query.
    Query {
        file: PathBuf,
        #[arg(required = true)]
        points: Vec<String>,
    },
    /// Space breakdown of a stored structure.
    Stats { file: PathBuf },
    /// Information-theoretic bounds for `n` keys from `[0..u)`.
    Bounds {
        /// `N`, `2^k` or `2^(2^t)`.
        #[arg(long)]
        u: String,
        #[arg(long)]
        n: u64,
    },
    #[command(subcommand)]
    Lab(LabCommand),
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    input_format: KeyFormat,
    /// Universe size; defaults to the largest key plus one.
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// `plain`, `bucketed`, `big-universe` or `auto`.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    plain_cutoff: Option<u64>,
    #[arg(long)]
    bucket_size: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum LabCommand {
    /// Smallest family of colorings encoding every increasing sequence.
    MinFamily {
        #[arg(long)]
        u: u64,
        #[arg(long)]
        n: u32,
    },
    /// Encoding and abnormal-block probabilities of the random process.
    Process(ProcessArgs),
    /// Sparse/dense decomposition of one stage block.
    Density(DensityArgs),
    /// Exact reach probabilities of stage blocks.
    Census(CensusArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct Shape {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    f: u64,
    /// Length of the last-level blocks; defaults to `f`.
    #[arg(long)]
    lastlen: Option<u64>,
    /// Density threshold as `a/b`.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
struct ProcessArgs {
    #[command(flatten)]
    shape: Shape,
    /// File, literal list, `const:C`, `ramp` or `random`.
    #[arg(long)]
    coloring: String,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    coloring: String,
    #[arg(long, default_value_t = 1)]
    stage: u32,
    /// First level of the stage interval; required past stage 1.
    #[arg(long)]
    level: Option<u64>,
    /// Index of the block among the level-`level` blocks.
    #[arg(long, default_value_t = 0)]
    block: u64,
    /// Defaults to the stage number.
    #[arg(long)]
    color: Option<u32>,
}

#[derive(Args, Debug)]
struct CensusArgs {
    #[command(flatten)]
    shape: Shape,
    /// Only this stage; every reachable (stage, level) pair otherwise.
    #[arg(long, requires = "level")]
    stage: Option<u32>,
    #[arg(long, requires = "stage")]
    level: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Space of every regime over a grid of key counts and densities.
    Sweep {
        /// Comma-separated key counts.
        #[arg(long, value_delimiter = ',', default_value = "1024,16384")]
        n: Vec<u64>,
        /// Comma-separated `u/n` ratios (`N` or `2^k`).
        #[arg(long, value_delimiter = ',', default_value = "2,16,2^8,2^16,2^32")]
        ratios: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "plain,bucketed,big-universe")]
        regimes: Vec<String>,
        /// Adds build times; rows are then no longer reproducible.
        #[arg(long)]
        timing: bool,
    },
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim().replace('_', "");
    let v = match t.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => t.parse(),
    };
    v.map_err(|_| usage(format!("seed '{s}' is not an unsigned integer")))
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut c = Config::default();
    if let Some(path) = &cli.config {
        c.apply_file(path)?;
    }
    if let Ok(s) = std::env::var(SEED_ENV) {
        if cli.seed.is_none() {
            c.seed = parse_seed(&s).with_context(|| format!("from {SEED_ENV}"))?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        c.set(k.trim(), v.trim())?;
    }
    if let Some(s) = &cli.seed {
        c.seed = parse_seed(s)?;
    }
    if cli.format.is_some() {
        c.format = cli.format;
    }
    if cli.workers.is_some() {
        c.workers = cli.workers;
    }
    if let Command::Build(b) = &cli.command {
        if let Some(r) = &b.regime {
            c.set("regime", r)?;
        }
        if let Some(p) = b.plain_cutoff {
            c.plain_cutoff = p;
        }
        if let Some(s) = b.bucket_size {
            c.inner_bucket_size = Some(s);
        }
    }
    c.validate()?;
    Ok(c)
}

fn params_for(shape: &Shape) -> Result<ProcessParams> {
    let p = make_params(shape.n, shape.f, shape.lastlen.unwrap_or(shape.f))?;
    if shape.tau.is_none() && shape.sigma.is_none() && shape.theta.is_none() {
        return Ok(p);
    }
    let tau = match &shape.tau {
        Some(t) => {
            let (a, b) = t.split_once('/').unwrap_or((t.as_str(), "1"));
            let parse = |s: &str| s.trim().parse::<u64>().map_err(|_| usage(format!("tau '{t}' is not a/b")));
            let (a, b) = (parse(a)?, parse(b)?);
            if b == 0 {
                bail!(usage("tau denominator is zero"));
            }
            num_rational::Ratio::new(a, b)
        }
        None => p.tau,
    };
    let (sigma, theta) = (shape.sigma.unwrap_or(p.sigma), shape.theta.unwrap_or(p.theta));
    Ok(p.with_thresholds(tau, sigma, theta)?)
}

struct Ctx {
    config: Config,
    out: BufWriter<std::io::StdoutLock<'static>>,
}

impl Ctx {
    fn format(&self, default: Format) -> Format {
        self.config.format.unwrap_or(default)
    }

    fn header(&self, command: &str, params: Value) -> Header {
        Header::new(command, self.config.seed, params)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<mmphf_core::Error>() {
            return match core {
                mmphf_core::Error::BudgetExceeded(_) | mmphf_core::Error::InstanceTooLarge(_) => 4,
                _ => 3,
            };
        }
    }
    3
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = resolve_config(&cli)?;
    if let Some(w) = config.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("starting worker threads")?;
    }
    let mut ctx = Ctx {
        config,
        out: BufWriter::new(std::io::stdout().lock()),
    };
    let code = match cli.command {
        Command::Build(args) => cmd_build(&mut ctx, &args)?,
        Command::Query { file, points } => cmd_query(&mut ctx, &file, &points)?,
        Command::Stats { file } => cmd_stats(&mut ctx, &file)?,
        Command::Bounds { u, n } => cmd_bounds(&mut ctx, &u, n)?,
        Command::Lab(LabCommand::MinFamily { u, n }) => cmd_min_family(&mut ctx, u, n)?,
        Command::Lab(LabCommand::Process(args)) => cmd_process(&mut ctx, &args)?,
        Command::Lab(LabCommand::Density(args)) => cmd_density(&mut ctx, &args)?,
        Command::Lab(LabCommand::Census(args)) => cmd_census(&mut ctx, &args)?,
        Command::Bench(BenchCommand::Sweep {
            n,
            ratios,
            regimes,
            timing,
        }) => cmd_sweep(&mut ctx, &n, &ratios, &regimes, timing)?,
    };
    ctx.out.flush()?;
    Ok(code)
}

fn cmd_build(ctx: &mut Ctx, args: &BuildArgs) -> Result<ExitCode> {
    let keys = read_keys(&args.input, args.input_format)?;
    if keys.is_empty() {
        bail!("n ≥ 1 required: {} holds no keys", args.input.display());
    }
    let u = match &args.u {
        Some(s) => parse_universe(s)?,
        None => u128::from(*keys.last().expect("nonempty")) + 1,
    };
    let n = keys.len();
    let ks = SortedKeySet::new(keys, u)?;
    let h = MonotoneHash::build(&ks, &ctx.config.build_config())?;
    let bytes = h.to_bytes();
    std::fs::write(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    let report = h.space_report();
    let header = ctx.header(
        "build",
        json!({ "input": args.input, "n": n, "u": u.to_string(), "config": ctx.config }),
    );
    let result = json!({
        "regime": h.regime(),
        "n": n,
        "u": u.to_string(),
        "total_bits": report.total_bits,
        "bits_per_key": report.bits_per_key,
        "out": args.out,
    });
    match ctx.format(Format::Json) {
        Format::Json => write_json(&mut ctx.out, &header, &result)?,
        Format::Csv => write_csv(
            &mut ctx.out,
            &header,
            &["regime", "n", "u", "total_bits", "bits_per_key"],
            &[vec![
                h.regime().to_string(),
                n.to_string(),
                u.to_string(),
                report.total_bits.to_string(),
                num(report.bits_per_key),
            ]],
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_structure(path: &PathBuf) -> Result<MonotoneHash> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    MonotoneHash::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn cmd_query(ctx: &mut Ctx, file: &PathBuf, points: &[String]) -> Result<ExitCode> {
    let h = load_structure(file)?;
    let mut failed = false;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let answer = p
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("'{p}' is not an unsigned integer"))
            .and_then(|x| h.rank(x).map_err(|e| e.to_string()));
        failed |= answer.is_err();
        rows.push((p.clone(), answer));
    }
    match ctx.config.format {
        None => {
            for (_, a) in &rows {
                match a {
                    Ok(r) => writeln!(ctx.out, "{r}")?,
                    Err(e) => writeln!(ctx.out, "error: {e}")?,
                }
            }
        }
        Some(fmt) => {
            let header = ctx.header("query", json!({ "file": file }));
            match fmt {
                Format::Json => {
                    let items: Vec<Value> = rows
                        .iter()
                        .map(|(x, a)| match a {
                            Ok(r) => json!({ "x": x, "rank": r }),
                            Err(e) => json!({ "x": x, "error": e }),
                        })
                        .collect();
                    write_json(&mut ctx.out, &header, &items)?;
                }
                Format::Csv => {
                    let table: Vec<Vec<String>> = rows
                        .iter()
                        .map(|(x, a)| match a {
                            Ok(r) => vec![x.clone(), r.to_string(), String::new()],
                            Err(e) => vec![x.clone(), String::new(), e.clone()],
                        })
                        .collect();
                    write_csv(&mut ctx.out, &header, &["x", "rank", "error"], &table)?;
                }
            }
        }
    }
    Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn cmd_stats(ctx: &mut Ctx, file: &PathBuf) -> Result<ExitCode> {
    let h = load_structure(file)?;
    let report = h.space_report();
    let header = ctx.header("stats", json!({ "file": file }));
    match ctx.format(Format::Json) {
        Format::Json => write_json(&mut ctx.out, &header, &report)?,
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .components
                .iter()
                .map(|c| vec![c.name.to_string(), c.bits.to_string()])
                .collect();
            rows.push(vec!["total".into(), report.total_bits.to_string()]);
            write_csv(&mut ctx.out, &header, &["component", "bits"], &rows)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(ctx: &mut Ctx, u: &str, n: u64) -> Result<ExitCode> {
    let universe: Universe = u.parse().map_err(|e: mmphf_core::Error| usage(e.to_string()))?;
    let report = bound_report(&universe, n)?;
    let header = ctx.header("bounds", json!({ "u": u, "n": n }));
    match ctx.format(Format::Json) {
        Format::Json => write_json(&mut ctx.out, &header, &report)?,
        Format::Csv => {
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            write_csv(
                &mut ctx.out,
                &header,
                &[
                    "u",
                    "n",
                    "method",
                    "log2_u",
                    "log_binom",
                    "entropy_upper",
                    "entropy_lower",
                    "weak_family_bound",
                    "space_lower_bits",
                    "alpha",
                    "alpha_bound",
                    "alpha_identity",
                ],
                &[vec![
                    report.u.clone(),
                    n.to_string(),
                    serde_json::to_value(report.method)?.as_str().unwrap_or_default().to_string(),
                    num(report.log2_u),
                    num(report.log_binom),
                    num(report.entropy_upper),
                    num(report.entropy_lower),
                    num(report.weak_family_bound),
                    num(report.space_lower_bits),
                    opt(report.alpha),
                    opt(report.alpha_bound),
                    opt(report.alpha_identity),
                ]],
            )?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn colors_string(c: &dyn ColorSource) -> String {
    (0..c.universe()).map(|x| c.color(x).to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_min_family(ctx: &mut Ctx, u: u64, n: u32) -> Result<ExitCode> {
    let f = min_family_size(u, n, ctx.config.family_limits())?;
    let family: Vec<String> = f.family.iter().map(|c| colors_string(c)).collect();
    let header = ctx.header(
        "lab min-family",
        json!({ "u": u, "n": n, "limits": {
            "max_sequences": ctx.config.max_sequences,
            "max_columns": ctx.config.max_columns,
            "max_nodes": ctx.config.max_nodes,
        }}),
    );
    let weak = f.weak_bound.clone();
    let weak_f64 = num_traits::ToPrimitive::to_f64(&weak).unwrap_or(f64::NAN);
    match ctx.format(Format::Json) {
        Format::Json => write_json(
            &mut ctx.out,
            &header,
            &json!({
                "u": u,
                "n": n,
                "size": f.size,
                "sequences": f.sequences,
                "weak_bound": ratio_to_string(&weak),
                "weak_bound_value": weak_f64,
                "candidates": f.candidates,
                "nodes": f.nodes,
                "family": family,
            }),
        )?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = family
                .iter()
                .enumerate()
                .map(|(i, c)| vec![i.to_string(), c.clone()])
                .collect();
            write_csv(&mut ctx.out, &header, &["member", "colors"], &rows)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CensusSummary {
    stage: u32,
    level: u64,
    #[serde(flatten)]
    census: Option<Census>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn censuses(ctx: &Ctx, p: &ProcessParams, only: Option<(u32, u64)>) -> Result<Vec<CensusSummary>> {
    let points = match only {
        Some(pt) => vec![pt],
        None => census_points(p),
    };
    let limits = ctx.config.lab_limits();
    let mut out = Vec::new();
    for (stage, level) in points {
        match reachability_census(p, stage, level, &limits) {
            Ok(c) => out.push(CensusSummary {
                stage,
                level,
                census: Some(c),
                error: None,
            }),
            Err(e @ mmphf_core::Error::BudgetExceeded(_)) if only.is_none() => out.push(CensusSummary {
                stage,
                level,
                census: None,
                error: Some(e.to_string()),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn estimate_row(name: &str, e: &Estimate) -> Vec<String> {
    vec![
        name.into(),
        num(e.value),
        num(e.std_error),
        num(e.half_width_99),
        e.samples.to_string(),
        e.exact.as_ref().map(ratio_to_string).unwrap_or_default(),
    ]
}

fn cmd_process(ctx: &mut Ctx, args: &ProcessArgs) -> Result<ExitCode> {
    let p = params_for(&args.shape)?;
    let c = load_coloring(&args.coloring, p.u, p.n, ctx.config.seed)?;
    let mode = match args.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Mc => Mode::MonteCarlo {
            samples: args.samples,
            seed: ctx.config.seed,
        },
    };
    let limits = ctx.config.lab_limits();
    let encoding = encoding_probability(&p, &*c, mode, &limits)?;
    let abnormal = abnormal_last_block_probability(&p, &*c, mode, &limits)?;
    let census = censuses(ctx, &p, None)?;
    let header = ctx.header(
        "lab process",
        json!({ "process": p, "coloring": args.coloring, "mode": args.mode, "samples": args.samples, "limits": limits }),
    );
    match ctx.format(Format::Json) {
        Format::Json => write_json(
            &mut ctx.out,
            &header,
            &json!({
                "u": p.u,
                "encoding_probability": encoding,
                "abnormal_last_block_probability": abnormal,
                "census": census,
            }),
        )?,
        Format::Csv => write_csv(
            &mut ctx.out,
            &header,
            &["quantity", "value", "std_error", "half_width_99", "samples", "exact"],
            &[estimate_row("encoding", &encoding), estimate_row("abnormal_last_block", &abnormal)],
        )?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_density(ctx: &mut Ctx, args: &DensityArgs) -> Result<ExitCode> {
    let p = params_for(&args.shape)?;
    if args.stage == 0 || args.stage >= p.n {
        bail!(usage(format!("stage must lie in [1..{})", p.n)));
    }
    let level = match (args.stage, args.level) {
        (1, None) => 0,
        (_, Some(l)) => l,
        (_, None) => bail!(usage("--level is required past stage 1")),
    };
    let len = p.interval_len(args.stage);
    if level + len > p.levels {
        bail!(usage(format!("level interval [{level}..{}) exceeds L = {}", level + len, p.levels)));
    }
    let bl = p.block_len(level);
    let start = args
        .block
        .checked_mul(bl)
        .filter(|&s| s < p.u)
        .ok_or_else(|| usage(format!("block {} does not exist at level {level}", args.block)))?;
    let c = load_coloring(&args.coloring, p.u, p.n, ctx.config.seed)?;
    let color = args.color.unwrap_or(args.stage);
    let prof = density_profile(&p, &*c, (start, start + bl), (level, level + len), color, &ctx.config.lab_limits())?;
    let header = ctx.header(
        "lab density",
        json!({ "process": p, "coloring": args.coloring, "stage": args.stage, "level": level, "block": args.block, "color": color }),
    );
    match ctx.format(Format::Json) {
        Format::Json => write_json(&mut ctx.out, &header, &prof)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..prof.q.len())
                .map(|k| {
                    let part = prof.partitions[k].as_ref();
                    let size = |l: &[(u64, u64)]| l.iter().map(|&(a, b)| b - a).sum::<u64>().to_string();
                    vec![
                        k.to_string(),
                        prof.lambda[k].to_string(),
                        format!("{}/{}", prof.q[k].numer(), prof.q[k].denom()),
                        prof.abnormal[k].to_string(),
                        part.map(|p| size(&p.sparse)).unwrap_or_default(),
                        part.map(|p| size(&p.dense)).unwrap_or_default(),
                        size(&prof.abnormal_blocks[k]),
                    ]
                })
                .collect();
            write_csv(
                &mut ctx.out,
                &header,
                &["k", "lambda", "q", "abnormal", "sparse_len", "dense_len", "abnormal_len"],
                &rows,
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_census(ctx: &mut Ctx, args: &CensusArgs) -> Result<ExitCode> {
    let p = params_for(&args.shape)?;
    let only = args.stage.zip(args.level);
    let rows = censuses(ctx, &p, only)?;
    let header = ctx.header("lab census", json!({ "process": p, "stage": args.stage, "level": args.level }));
    match ctx.format(Format::Json) {
        Format::Json => write_json(&mut ctx.out, &header, &rows)?,
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| match &r.census {
                    Some(c) => vec![
                        r.stage.to_string(),
                        r.level.to_string(),
                        c.total_blocks.to_string(),
                        c.reachable.to_string(),
                        num(c.unreachable_fraction),
                        c.uniform.to_string(),
                        c.reach_probability.as_ref().map(ratio_to_string).unwrap_or_default(),
                        String::new(),
                    ],
                    None => {
                        let mut row = vec![r.stage.to_string(), r.level.to_string()];
                        row.extend(std::iter::repeat_n(String::new(), 5));
                        row.push(r.error.clone().unwrap_or_default());
                        row
                    }
                })
                .collect();
            write_csv(
                &mut ctx.out,
                &header,
                &[
                    "stage",
                    "level",
                    "total_blocks",
                    "reachable",
                    "unreachable_fraction",
                    "uniform",
                    "reach_probability",
                    "error",
                ],
                &table,
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_keys(seed: u64, stream: u64, n: u64, u: u128) -> Vec<u64> {
    let mut rng = chunk_rng(seed, stream);
    if u <= 1 << 26 {
        let mut keys: Vec<u64> = sample(&mut rng, u as usize, n as usize)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        keys.sort_unstable();
        return keys;
    }
    let max = (u - 1) as u64;
    let mut set = BTreeSet::new();
    while (set.len() as u64) < n {
        set.insert(rng.random_range(0..=max));
    }
    set.into_iter().collect()
}

fn cmd_sweep(ctx: &mut Ctx, ns: &[u64], ratios: &[String], regimes: &[String], timing: bool) -> Result<ExitCode> {
    let regimes: Vec<Regime> = regimes
        .iter()
        .map(|r| r.parse().map_err(|e: mmphf_core::Error| usage(e.to_string())))
        .collect::<Result<_>>()?;
    let ratios: Vec<u128> = ratios.iter().map(|r| parse_universe(r)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (ni, &n) in ns.iter().enumerate() {
        if n == 0 {
            bail!(usage("key counts must be positive"));
        }
        for (ri, &ratio) in ratios.iter().enumerate() {
            let Some(u) = u128::from(n).checked_mul(ratio).filter(|&u| u <= 1 << 64) else {
                continue;
            };
            let keys = sweep_keys(ctx.config.seed, (ni * ratios.len() + ri) as u64, n, u);
            let ks = SortedKeySet::new(keys, u)?;
            let chosen = MonotoneHash::build(&ks, &mmphf_core::BuildConfig {
                regime: None,
                ..ctx.config.build_config()
            })?
            .regime();
            for &regime in &regimes {
                if regime == Regime::PlainBitArray && u > mmphf_core::mmphf::PLAIN_MAX_UNIVERSE {
                    continue;
                }
                let config = mmphf_core::BuildConfig {
                    regime: Some(regime),
                    ..ctx.config.build_config()
                };
                let start = Instant::now();
                let h = MonotoneHash::build(&ks, &config)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                let r = h.space_report();
                let mut row = vec![
                    n.to_string(),
                    u.to_string(),
                    regime.to_string(),
                    r.total_bits.to_string(),
                    num(r.bits_per_key),
                    (regime == chosen).to_string(),
                ];
                let mut rec = json!({
                    "n": n, "u": u.to_string(), "regime": regime, "total_bits": r.total_bits,
                    "bits_per_key": r.bits_per_key, "chosen": regime == chosen,
                });
                if timing {
                    row.push(format!("{ms:.3}"));
                    rec["build_ms"] = json!(ms);
                }
                rows.push(row);
                records.push(rec);
            }
        }
    }
    let header = ctx.header(
        "bench sweep",
        json!({ "n": ns, "ratios": ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "regimes": regimes, "config": ctx.config }),
    );
    match ctx.format(Format::Csv) {
        Format::Json => write_json(&mut ctx.out, &header, &records)?,
        Format::Csv => {
            let mut cols = vec!["n", "u", "regime", "total_bits", "bits_per_key", "chosen"];
            if timing {
                cols.push("build_ms");
            }
            write_csv(&mut ctx.out, &header, &cols, &rows)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
