use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdewatch::detector::trace::replay_golden_trace;
use kdewatch::detector::{BandwidthSection, ConfigFile, DetectorConfig};
use kdewatch::stream::{JsonLinesSink, Monitor, RunOptions, Snapshot};

#[derive(Parser)]
#[command(
    name = "monitor",
    version,
    about = "Per-user time-of-day anomaly monitor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream audit events and emit alerts.
    Run(Box<RunArgs>),
    /// Replay the built-in fourteen-event walkthrough and compare checkpoints.
    ReplayTrace,
}

#[derive(Args)]
struct RunArgs {
    /// Line-delimited JSON events, or `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Alert output, or `-` for stdout.
    #[arg(long, default_value = "-")]
    alerts: String,
    /// Write a state snapshot here after the run.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Resume from a snapshot; its configuration replaces --config and overrides.
    #[arg(long)]
    state_in: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Print run statistics as JSON on stderr.
    #[arg(long)]
    stats: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_gap_weeks: Option<u32>,
    /// `silverman` or `fixed`.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Fixed bandwidth in minutes.
    #[arg(long)]
    bandwidth_value: Option<f64>,
    #[arg(long)]
    circular: Option<bool>,
}

impl Overrides {
    fn is_empty(&self) -> bool {
        self.n.is_none()
            && self.k.is_none()
            && self.threshold.is_none()
            && self.max_gap_weeks.is_none()
            && self.bandwidth.is_none()
            && self.bandwidth_value.is_none()
            && self.circular.is_none()
    }

    fn into_file(self) -> ConfigFile {
        let bandwidth = (self.bandwidth.is_some() || self.bandwidth_value.is_some()).then_some(
            BandwidthSection {
                method: self.bandwidth,
                value: self.bandwidth_value,
            },
        );
        ConfigFile {
            n: self.n,
            k: self.k,
            threshold: self.threshold,
            max_gap_weeks: self.max_gap_weeks,
            bandwidth,
            kernel: None,
            circular: self.circular,
        }
    }
}

enum Failure {
    Runtime(String),
    Usage(String),
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("error")),
        )
        .with_writer(io::stderr)
        .init();

    let result = match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::ReplayTrace => replay_trace(),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>, overrides: Overrides) -> Result<DetectorConfig, Failure> {
    let file = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            ConfigFile::parse(&text)
                .map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    file.merge(overrides.into_file())
        .resolve()
        .map_err(|e| Failure::Usage(format!("invalid config: {e}")))
}

fn run(args: RunArgs) -> Result<ExitCode, Failure> {
    let mut monitor = match &args.state_in {
        Some(path) => {
            if args.config.is_some() || !args.overrides.is_empty() {
                tracing::warn!("--state-in given: using the snapshot's configuration");
            }
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("cannot read snapshot {}: {e}", path.display()))
            })?;
            let snapshot = Snapshot::from_json(&text)
                .map_err(|e| Failure::Usage(format!("snapshot {}: {e}", path.display())))?;
            Monitor::from_snapshot(snapshot, args.workers)
                .map_err(|e| Failure::Usage(format!("snapshot {}: {e}", path.display())))?
        }
        None => {
            let config = load_config(args.config.as_deref(), args.overrides)?;
            Monitor::new(config, args.workers).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };

    let input: Box<dyn BufRead> = if args.input == "-" {
        Box::new(io::stdin().lock())
    } else {
        let file = File::open(&args.input)
            .map_err(|e| Failure::Runtime(format!("cannot open input {}: {e}", args.input)))?;
        Box::new(BufReader::with_capacity(1 << 16, file))
    };
    let out: Box<dyn Write> = if args.alerts == "-" {
        Box::new(io::stdout().lock())
    } else {
        Box::new(
            File::create(&args.alerts)
                .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", args.alerts)))?,
        )
    };
    let mut sink = JsonLinesSink::new(out);

    let stats = monitor
        .run(input, &mut sink, RunOptions::default())
        .map_err(|e| Failure::Runtime(e.to_string()))?;

    if let Some(path) = &args.state_out {
        std::fs::write(path, monitor.snapshot().to_json()).map_err(|e| {
            Failure::Runtime(format!("cannot write snapshot {}: {e}", path.display()))
        })?;
    }
    if args.stats {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&stats).expect("stats serialize")
        );
    } else {
        eprintln!("{stats}");
    }
    Ok(ExitCode::SUCCESS)
}

fn replay_trace() -> Result<ExitCode, Failure> {
    let report = replay_golden_trace().map_err(|e| Failure::Runtime(e.to_string()))?;
    let recorder = &report.recorder;
    for c in &recorder.checkpoints {
        let status = if c.passed() { "ok  " } else { "FAIL" };
        println!("{status} {} after event {}", c.id, c.after_event);
        println!("     expected {}", c.expected);
        println!("     observed {}", c.observed);
    }
    for note in &recorder.divergences {
        println!("note {note}");
    }
    for alert in &recorder.alerts {
        println!(
            "alert {} at {} (density {:.3e} <= {})",
            alert.event_id, alert.minute, alert.density, alert.threshold
        );
    }
    println!("replayed in {:?}", report.elapsed);
    Ok(if recorder.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
