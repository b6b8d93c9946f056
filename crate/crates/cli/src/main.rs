//! `saf`: design, evaluate and summarize sparse MIMO array layouts.

use std::fmt;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use saf_core::beamforming::{beamform, synthesize_snapshot, Target};
use saf_core::geometry::build_virtual_array;
use saf_core::metrics::{compute_report, Fov};
use saf_core::optimizer::{optimize, Objective};
use saf_core::{ArrayLayout, DesignSpec, OptimizerTrace, UvGrid};

#[derive(Parser)]
#[command(name = "saf", version, about = "Sparse MIMO array design and evaluation")]
struct Cli {
    /// Worker threads; 1 runs fully serial. Defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a layout from a design spec.
    Design(DesignArgs),
    /// Beamform a layout and score the pattern.
    Evaluate(EvaluateArgs),
    /// Summarize an optimizer trace.
    Report(ReportArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Design spec (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides both oversampling factors of the spec.
    #[arg(long)]
    grid_oversample: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Layout (JSON), as written by `saf design`.
    #[arg(long)]
    layout: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    grid_oversample: usize,
    /// Target direction `u,v` with unit amplitude; repeatable. Defaults to broadside.
    #[arg(long = "target", value_parser = parse_target)]
    targets: Vec<(f64, f64)>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace (JSON lines), as written by `saf design`.
    trace: PathBuf,
}

fn parse_target(s: &str) -> Result<(f64, f64), String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("expected u,v, got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(u)?, num(v)?))
}

enum Failure {
    Io(String),
    Input(String),
}

impl Failure {
    fn io(path: &Path, e: io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) | Failure::Input(m) => f.write_str(m),
        }
    }
}

impl From<saf_core::Error> for Failure {
    fn from(e: saf_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    spec_sha256: String,
    seed: Option<u64>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<String>,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<String, Failure> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::io(&path, e))?;
    Ok(name.to_string())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, Failure> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
        w.write_all(b"\n")
    })
}

/// Prints to stdout; a closed pipe is not an error.
fn say(args: fmt::Arguments<'_>) {
    let _ = writeln!(io::stdout(), "{args}");
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn design(args: DesignArgs) -> Result<(), Failure> {
    let started = now_ms();
    let text = read(&args.config)?;
    let mut spec: DesignSpec = parse_json(&args.config, &text)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(q) = args.grid_oversample {
        spec.q_phi = q;
        spec.q_theta = q;
    }
    spec.validate()?;
    // serde_json maps are ordered by key, so this is a canonical form of the effective spec.
    let canonical = serde_json::to_vec(&serde_json::to_value(&spec).expect("spec serializes")).expect("value serializes");

    let result = optimize(&spec)?;
    let grid = result.grid.grid;
    let objective = Objective::for_spec(&spec, &grid)?;
    let vrx = build_virtual_array(&result.layout)?;
    let pattern = beamform(&vrx, &synthesize_snapshot(&vrx, &[Target::broadside()]), objective.grid())?;
    let metrics = compute_report(&result.layout, &pattern, Some(objective.fov()), None)?;
    log::info!("{}", result.trace.summary().to_string().replace('\n', "; "));

    fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let out = &args.out;
    let mut outputs = vec![
        write_json(out, "layout.json", &result.layout)?,
        write_file(out, "trace.jsonl", |w| result.trace.write_jsonl(w))?,
        write_json(out, "metrics.json", &metrics)?,
        write_file(out, "pattern.csv", |w| pattern.write_csv(w))?,
    ];
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "design",
        spec_sha256: sha256_hex(&canonical),
        seed: Some(spec.seed),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs,
    };
    write_json(out, "manifest.json", &manifest)?;
    say(format_args!("{}\nwrote {}", result.trace.summary(), out.display()));
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let started = now_ms();
    let text = read(&args.layout)?;
    let layout: ArrayLayout = parse_json(&args.layout, &text)?;
    let targets = if args.targets.is_empty() {
        vec![Target::broadside()]
    } else {
        args.targets
            .iter()
            .map(|&(u, v)| Target::new(u, v, 1.0.into()))
            .collect::<saf_core::Result<Vec<_>>>()?
    };
    let vrx = build_virtual_array(&layout)?;
    let grid = UvGrid::covering(&vrx, args.grid_oversample, args.grid_oversample)?;
    let pattern = beamform(&vrx, &synthesize_snapshot(&vrx, &targets), &grid)?;
    let metrics = compute_report(&layout, &pattern, None::<&Fov<f64>>, None)?;

    fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let out = &args.out;
    let mut outputs = vec![write_json(out, "metrics.json", &metrics)?, write_file(out, "pattern.csv", |w| pattern.write_csv(w))?];
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "evaluate",
        spec_sha256: sha256_hex(text.as_bytes()),
        seed: None,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs,
    };
    write_json(out, "manifest.json", &manifest)?;
    say(format_args!("PSLR {:.4} dB, peak at u={:.6} v={:.6}", metrics.pslr_db, metrics.peak_u, metrics.peak_v));
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let file = fs::File::open(&args.trace).map_err(|e| Failure::io(&args.trace, e))?;
    let trace = OptimizerTrace::read_jsonl(BufReader::new(file))
        .map_err(|e| Failure::Input(format!("{}: {e}", args.trace.display())))?;
    say(format_args!("{}", trace.summary()));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SAF_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Design(a) => design(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
