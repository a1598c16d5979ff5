//! Single-binary operator entry point: `process` recorded detection streams,
//! `simulate` synthetic scenarios, `bench` the ablation/module matrices and
//! `compare` two benchmark reports.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tls_assist::config::{ConfigError, RunConfig};
use tls_assist::harness::{
    ablation_rows, compare, module_rows, run_benchmark, BenchRequest, BenchmarkReport, HarnessError,
};
use tls_assist::io::{emit_frame, stream_session, SessionError};
use tls_assist::report::render;
use tls_assist::sim::{corrupt, generate_scenario, ground_truth_frame, mix, NoiseModel, TrackClass};

const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_SESSION: u8 = 5;
const EXIT_SHAPE: u8 = 6;

const CONFIG_ENV: &str = "TLS_ASSIST_CONFIG";

#[derive(Parser)]
#[command(name = "tls-assist", version, about = "Traffic light and sign assistance layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the TOML run configuration; defaults are used when absent.
    /// The TLS_ASSIST_CONFIG environment variable overrides the default path.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match self.config.as_ref().or(env_path.as_ref()) {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackArg {
    Tiny,
    Short,
    Long,
}

impl From<TrackArg> for TrackClass {
    fn from(t: TrackArg) -> TrackClass {
        match t {
            TrackArg::Tiny => TrackClass::Tiny,
            TrackArg::Short => TrackClass::Short,
            TrackArg::Long => TrackClass::Long,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixArg {
    Ablation,
    Modules,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a recorded frame-record stream ("-" = stdin).
    Process {
        #[command(flatten)]
        config: ConfigArg,
        /// Input frame-record stream, one JSON object per line.
        input: PathBuf,
        /// Notice output path ("-" = stdout).
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Generate scenario + detection-stream file pairs into a directory.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value = "short")]
        track: TrackArg,
        /// Number of scenario/stream pairs to write.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the ablation and module benchmark matrices and write reports.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        /// Which matrix to run.
        #[arg(long, value_enum, default_value = "both")]
        ablation: MatrixArg,
        /// Tracks to benchmark; defaults to all three.
        #[arg(long, value_enum, num_args = 1..)]
        track: Option<Vec<TrackArg>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        routes: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// Worker threads for route execution.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two benchmark report JSON files (baseline first).
    Compare {
        baseline: PathBuf,
        other: PathBuf,
        /// Optional path for the delta table as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text)
}

fn cmd_process(config: &ConfigArg, input: &Path, out: &str) -> ExitCode {
    let cfg = match config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let reader: Box<dyn Read> = if input.as_os_str() == "-" {
        Box::new(std::io::stdin())
    } else {
        match File::open(input) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(EXIT_IO, format!("{}: {e}", input.display())),
        }
    };
    let writer: Box<dyn Write> = if out == "-" {
        Box::new(std::io::stdout())
    } else {
        match File::create(out) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(EXIT_IO, format!("{out}: {e}")),
        }
    };
    match stream_session(BufReader::new(reader), BufWriter::new(writer), &cfg) {
        Ok(summary) => {
            eprintln!(
                "processed {} frames ({} malformed, {} suppressed)",
                summary.frames, summary.errors, summary.suppressed
            );
            ExitCode::SUCCESS
        }
        Err(SessionError::Io(e)) => fail(EXIT_IO, e),
        Err(e @ SessionError::TooManyErrors { .. }) => fail(EXIT_SESSION, e),
    }
}

#[derive(Serialize)]
struct SimulateManifest {
    track: TrackClass,
    count: usize,
    seed: u64,
    scenarios: Vec<String>,
    streams: Vec<String>,
    config: RunConfig,
}

fn cmd_simulate(config: &ConfigArg, track: TrackClass, count: usize, seed: u64, out: &Path) -> ExitCode {
    let cfg = match config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail(EXIT_IO, format!("{}: {e}", out.display()));
    }
    let mut manifest = SimulateManifest {
        track,
        count,
        seed,
        scenarios: Vec::new(),
        streams: Vec::new(),
        config: cfg.clone(),
    };
    for i in 0..count {
        let scenario = generate_scenario(track, mix(seed, i as u64), &cfg.sim);
        let noise = NoiseModel {
            seed: mix(seed, 0x57_0000 | i as u64),
            ..cfg.noise.clone()
        };
        let scenario_name = format!("scenario_{i:03}.json");
        let stream_name = format!("stream_{i:03}.jsonl");
        if let Err(e) = write_json(&out.join(&scenario_name), &scenario) {
            return fail(EXIT_IO, e);
        }

        // one frame per tick of a constant-cruise pass over the route
        let dt = cfg.sim.tick_seconds;
        let speed = cfg.agent.cruise_speed;
        let ticks = (scenario.route_length / (speed * dt)).ceil() as u64;
        let mut lines = String::new();
        for tick in 0..ticks {
            let t = tick as f64 * dt;
            let gt = ground_truth_frame(&scenario, &cfg.sim, speed * t, t);
            lines.push_str(&emit_frame(&corrupt(&gt, &noise, tick, t)));
            lines.push('\n');
        }
        if let Err(e) = std::fs::write(out.join(&stream_name), lines) {
            return fail(EXIT_IO, e);
        }
        manifest.scenarios.push(scenario_name);
        manifest.streams.push(stream_name);
    }
    if let Err(e) = write_json(&out.join("manifest.json"), &manifest) {
        return fail(EXIT_IO, e);
    }
    ExitCode::SUCCESS
}

fn run_matrix(
    name: &str,
    report: &BenchmarkReport,
    out: &Path,
) -> Result<(), std::io::Error> {
    write_json(&out.join(format!("{name}.json")), report)?;
    std::fs::write(out.join(format!("{name}.txt")), render(report))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    config: &ConfigArg,
    matrix: MatrixArg,
    tracks: Option<Vec<TrackArg>>,
    seed: u64,
    routes: usize,
    repetitions: usize,
    jobs: usize,
    out: &Path,
) -> ExitCode {
    let cfg = match config.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if routes == 0 || repetitions == 0 {
        return fail(EXIT_CONFIG, "routes and repetitions must be >= 1");
    }
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail(EXIT_IO, format!("{}: {e}", out.display()));
    }
    let tracks: Vec<TrackClass> = tracks
        .map(|ts| ts.into_iter().map(TrackClass::from).collect())
        .unwrap_or_else(|| vec![TrackClass::Tiny, TrackClass::Short, TrackClass::Long]);

    let matrices: Vec<(&str, Vec<_>)> = match matrix {
        MatrixArg::Ablation => vec![("ablation", ablation_rows(&cfg))],
        MatrixArg::Modules => vec![("modules", module_rows(&cfg))],
        MatrixArg::Both => vec![
            ("ablation", ablation_rows(&cfg)),
            ("modules", module_rows(&cfg)),
        ],
    };
    for (name, rows) in matrices {
        let report = run_benchmark(&BenchRequest {
            rows,
            tracks: tracks.clone(),
            routes_per_track: routes,
            repetitions,
            master_seed: seed,
            jobs,
        });
        if let Err(e) = run_matrix(name, &report, out) {
            return fail(EXIT_IO, e);
        }
        println!("{}", render(&report));
    }
    ExitCode::SUCCESS
}

fn cmd_compare(baseline: &Path, other: &Path, out: Option<&Path>) -> ExitCode {
    let load = |path: &Path| -> Result<BenchmarkReport, ExitCode> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| fail(EXIT_IO, format!("{}: not a benchmark report: {e}", path.display())))
    };
    let a = match load(baseline) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let b = match load(other) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let table = match compare(&a, &b) {
        Ok(t) => t,
        Err(e @ HarnessError::ShapeMismatch(_)) => return fail(EXIT_SHAPE, e),
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    for row in &table.rows {
        println!("{}", row.label);
        for d in &row.deltas {
            println!(
                "  {:<16} {:>10.4} -> {:>10.4}  {:>+10.4}  {}",
                d.metric,
                d.baseline,
                d.value,
                d.absolute,
                tls_assist::harness::format_percent(d.percent)
            );
        }
    }
    if let Some(path) = out {
        if let Err(e) = write_json(path, &table) {
            return fail(EXIT_IO, e);
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Process { config, input, out } => cmd_process(&config, &input, &out),
        Command::Simulate {
            config,
            track,
            count,
            seed,
            out,
        } => cmd_simulate(&config, track.into(), count, seed, &out),
        Command::Bench {
            config,
            ablation,
            track,
            seed,
            routes,
            repetitions,
            jobs,
            out,
        } => cmd_bench(&config, ablation, track, seed, routes, repetitions, jobs, &out),
        Command::Compare { baseline, other, out } => {
            cmd_compare(&baseline, &other, out.as_deref())
        }
    }
}
