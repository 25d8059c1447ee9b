//! `netrescale` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse or validation
//! error, 3 invalid geometry, 4 structure mismatch.

pub mod document;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::arch::{propagate_shapes, Layer, NetworkSpec, TensorShape};
use crate::cost::cost_report;
use crate::error::Error;
use crate::search::{sample_candidates, sweep, SearchConfig, SlackRule};
use crate::solvers::{solve, Approach, BudgetMode, Deltas, EnumRanges, Interval, Solution, SolutionCandidate};
use crate::verify::verify_candidate;

pub use document::{ArchitectureDocument, CostTotals, SolutionDocument, FORMAT_VERSION, TOOL_VERSION};

pub const SEED_ENV: &str = "NETRESCALE_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_STRUCTURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "netrescale", version, about = "Rescale CNNs to larger inputs at equal parameter or FLOPS budget")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-layer shapes, parameters and FLOPS of an architecture file.
    Cost {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate budget-preserving modifications for one resolution.
    Solve(SolveArgs),
    /// Run solvers over a set of resolutions described by a config file.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory receiving one solution document per exported candidate.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Independently re-check a solution document.
    Verify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long)]
    approach: Approach,
    #[arg(long, default_value = "params")]
    mode: BudgetMode,
    /// New input side N'.
    #[arg(long)]
    resolution: u64,
    #[arg(long)]
    kernel: Option<Interval>,
    #[arg(long)]
    stride: Option<Interval>,
    #[arg(long)]
    padding: Option<Interval>,
    #[arg(long)]
    dilation: Option<Interval>,
    /// Keep only candidates whose whole-network budget delta is within ±α.
    #[arg(long)]
    slack: Option<u64>,
    /// With --slack, require 0 < Δ < α instead.
    #[arg(long, requires = "slack")]
    strict_slack: bool,
    /// Export only k seeded random candidates.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGeometry { .. } => EXIT_GEOMETRY,
        Error::StructureMismatch(_) => EXIT_STRUCTURE,
        _ => EXIT_PARSE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Runs one invocation, writing to the given streams, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let json = match &cli.command {
        Command::Cost { json, .. } | Command::Sweep { json, .. } | Command::Verify { json, .. } => *json,
        Command::Solve(a) => a.json,
    };
    let result = match cli.command {
        Command::Cost { file, json } => cmd_cost(&file, json, out),
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Sweep {
            file,
            config,
            seed,
            out: dir,
            json,
        } => cmd_sweep(&file, config.as_deref(), seed, dir.as_deref(), json, out),
        Command::Verify { file, json } => cmd_verify(&file, json, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            if json {
                let _ = writeln!(out, "{}", json!({ "error": f.message, "exit_code": f.code }));
            } else {
                let _ = writeln!(err, "error: {}", f.message);
            }
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

/// Parses, validates and shape-checks an architecture file.
fn load(path: &Path) -> Result<NetworkSpec, Failure> {
    let text = read(path)?;
    let doc = ArchitectureDocument::parse(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let net: NetworkSpec = doc.into();
    propagate_shapes(&net)?;
    Ok(net)
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::parse(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_failure)?;
    Ok(EXIT_OK)
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::parse(format!("i/o error: {e}"))
}

fn describe(layer: &Layer) -> String {
    match layer {
        Layer::Conv(c) => {
            let mut s = format!("conv {}×{} ×{}", c.kernel, c.kernel, c.out_channels);
            if c.stride != 1 {
                s += &format!(" s{}", c.stride);
            }
            if c.padding != 0 {
                s += &format!(" p{}", c.padding);
            }
            if c.dilation != 1 {
                s += &format!(" d{}", c.dilation);
            }
            s
        }
        Layer::Pool(p) => {
            let kind = match p.kind {
                crate::arch::PoolKind::Max => "maxpool",
                crate::arch::PoolKind::Avg => "avgpool",
            };
            let mut s = format!("{kind} {}×{} s{}", p.kernel, p.kernel, p.stride);
            if p.padding != 0 {
                s += &format!(" p{}", p.padding);
            }
            s
        }
        Layer::GlobalAvgPool {} => "global_avg_pool".into(),
        Layer::Flatten {} => "flatten".into(),
        Layer::Dense(d) => format!("dense {}", d.out_features),
    }
}

#[derive(Serialize)]
struct CostRow {
    index: usize,
    layer: Layer,
    output: TensorShape,
    params: u64,
    flops: u64,
}

#[derive(Serialize)]
struct CostJson {
    name: String,
    input: TensorShape,
    layers: Vec<CostRow>,
    total_params: u64,
    total_flops: u64,
}

fn cmd_cost(path: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    let net = load(path)?;
    let report = cost_report(&net)?;
    if json {
        let layers = net
            .layers
            .iter()
            .zip(&report.per_layer)
            .enumerate()
            .map(|(index, (layer, c))| CostRow {
                index,
                layer: *layer,
                output: c.out_shape,
                params: c.params,
                flops: c.flops,
            })
            .collect();
        return emit_json(
            out,
            &CostJson {
                name: net.name,
                input: net.input,
                layers,
                total_params: report.total_params,
                total_flops: report.total_flops,
            },
        );
    }
    let w = |e| io_failure(e);
    writeln!(out, "{} (input {})", net.name, net.input).map_err(w)?;
    writeln!(out, "{:>3}  {:<24} {:>14} {:>12} {:>14}", "#", "layer", "output", "params", "flops").map_err(w)?;
    for (i, (layer, c)) in net.layers.iter().zip(&report.per_layer).enumerate() {
        writeln!(
            out,
            "{:>3}  {:<24} {:>14} {:>12} {:>14}",
            i,
            describe(layer),
            c.out_shape.to_string(),
            c.params,
            c.flops
        )
        .map_err(w)?;
    }
    writeln!(out, "{:>3}  {:<24} {:>14} {:>12} {:>14}", "", "total", "", report.total_params, report.total_flops)
        .map_err(w)?;
    Ok(EXIT_OK)
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::parse(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--seed`, then the environment, then `fallback`.
fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64, Failure> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn export(dir: &Path, original: &NetworkSpec, candidates: &[SolutionCandidate]) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::parse(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        let doc = SolutionDocument::new(original, c)?;
        let path = dir.join(format!("{}-{:04}.json", file_stem(&c.modified_net.name), i));
        fs::write(&path, doc.to_json()).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    solution: &'a Solution,
    deltas: Deltas,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<&'a Path>,
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Outcome {
    let net = load(&args.file)?;
    let mut ranges = EnumRanges::default();
    ranges.kernel = args.kernel.unwrap_or(ranges.kernel);
    ranges.stride = args.stride.unwrap_or(ranges.stride);
    ranges.padding = args.padding.unwrap_or(ranges.padding);
    ranges.dilation = args.dilation.unwrap_or(ranges.dilation);
    if args.resolution <= net.input.spatial {
        return Err(Error::ResolutionDecrease {
            original: net.input.spatial,
            new: args.resolution,
        }
        .into());
    }
    let config = SearchConfig {
        budget_mode: args.mode,
        slack: args.slack,
        slack_rule: if args.strict_slack {
            SlackRule::StrictPositive
        } else {
            SlackRule::Absolute
        },
        ..Default::default()
    };

    let emitted = solve(&net, args.approach, args.resolution, &ranges, args.mode)?;
    let kept: Vec<_> = emitted.into_iter().filter(|c| config.admits(c)).collect();
    let count = kept.len();
    let chosen = match args.sample {
        Some(k) if !kept.is_empty() => sample_candidates(&kept, k, resolve_seed(args.seed, 0)?)?,
        _ => kept,
    };
    let paths = match &args.out {
        Some(dir) => export(dir, &net, &chosen)?,
        None => Vec::new(),
    };

    let lines: Vec<CandidateLine> = chosen
        .iter()
        .enumerate()
        .map(|(i, c)| CandidateLine {
            solution: &c.solution,
            deltas: c.deltas,
            file: paths.get(i).map(PathBuf::as_path),
        })
        .collect();
    if args.json {
        return emit_json(
            out,
            &json!({
                "approach": args.approach,
                "budget_mode": args.mode,
                "original_resolution": net.input.spatial,
                "new_resolution": args.resolution,
                "scope": args.approach.scope(),
                "count": count,
                "candidates": lines,
            }),
        );
    }
    let w = |e| io_failure(e);
    writeln!(
        out,
        "approach {} ({} mode), {} → {}: {} candidate{}",
        args.approach,
        args.mode,
        net.input.spatial,
        args.resolution,
        count,
        if count == 1 { "" } else { "s" }
    )
    .map_err(w)?;
    if args.sample.is_some() && count > 0 {
        writeln!(out, "sampled {}", lines.len()).map_err(w)?;
    }
    for line in &lines {
        write!(out, "  {:<56} Δparams {:>9}  ΔFLOPS {:>11}", line.solution.to_string(), line.deltas.params, line.deltas.flops)
            .map_err(w)?;
        if let Some(p) = line.file {
            write!(out, "  {}", p.display()).map_err(w)?;
        }
        writeln!(out).map_err(w)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(
    path: &Path,
    config_path: Option<&Path>,
    seed: Option<u64>,
    dir: Option<&Path>,
    json: bool,
    out: &mut dyn Write,
) -> Outcome {
    let net = load(path)?;
    let config: SearchConfig = match config_path {
        Some(p) => {
            let text = read(p)?;
            serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", p.display())))?
        }
        None => SearchConfig::default(),
    };
    let seed = resolve_seed(seed, config.rng_seed)?;
    let result = sweep(&net, &config)?;

    let mut exported = Vec::new();
    if let Some(dir) = dir {
        for (&resolution, list) in &result.candidates {
            let chosen = if config.sample_count == 0 {
                list.clone()
            } else {
                sample_candidates(list, config.sample_count, seed.wrapping_add(resolution))?
            };
            exported.extend(export(dir, &net, &chosen)?);
        }
    }

    if json {
        return emit_json(
            out,
            &json!({
                "name": net.name,
                "original_resolution": net.input.spatial,
                "budget_mode": config.budget_mode,
                "seed": seed,
                "rows": result.rows,
                "emitted": result.total_emitted(),
                "retained": result.total_retained(),
                "exported": exported,
            }),
        );
    }
    let w = |e| io_failure(e);
    writeln!(out, "{} (input {}), {} mode", net.name, net.input, config.budget_mode).map_err(w)?;
    writeln!(out, "{:>6} {:>8} {:>8} {:>9} {:>12} {:>12}", "N'", "approach", "emitted", "retained", "min Δ", "max Δ")
        .map_err(w)?;
    let show = |d: Option<i64>| d.map_or_else(|| "-".to_string(), |d| d.to_string());
    for row in &result.rows {
        write!(
            out,
            "{:>6} {:>8} {:>8} {:>9} {:>12} {:>12}",
            row.resolution,
            row.approach.to_string(),
            row.emitted,
            row.retained,
            show(row.min_delta),
            show(row.max_delta)
        )
        .map_err(w)?;
        if let Some(reason) = &row.skipped {
            write!(out, "  skipped: {reason}").map_err(w)?;
        }
        writeln!(out).map_err(w)?;
    }
    writeln!(
        out,
        "total: {} emitted, {} retained, {} exported",
        result.total_emitted(),
        result.total_retained(),
        exported.len()
    )
    .map_err(w)?;
    Ok(EXIT_OK)
}

fn cmd_verify(path: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    let text = read(path)?;
    let doc = SolutionDocument::parse(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let candidate = doc.candidate();
    let mut report = verify_candidate(&doc.original_net(), &candidate)?;
    for (label, net, recorded) in [
        ("baseline", &candidate.baseline, doc.baseline_cost),
        ("modified", &candidate.modified_net, doc.modified_cost),
    ] {
        let actual = CostTotals::of(net)?;
        if actual != recorded {
            report.violations.push(format!(
                "recorded {label} totals (params {}, FLOPS {}) differ from recomputed (params {}, FLOPS {})",
                recorded.params, recorded.flops, actual.params, actual.flops
            ));
        }
    }
    let code = if report.passed() { EXIT_OK } else { EXIT_VERIFY };
    if json {
        emit_json(
            out,
            &json!({ "passed": report.passed(), "report": report }),
        )?;
    } else {
        writeln!(out, "{report}").map_err(io_failure)?;
        writeln!(out, "{}", if report.passed() { "PASS" } else { "FAIL" }).map_err(io_failure)?;
    }
    Ok(code)
}
