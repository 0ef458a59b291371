use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tamperlock::experiments::{parse_config_file, run, RunConfig};
use tamperlock::Error;

/// Simulations of tamper-detecting messageless codes.
#[derive(Parser)]
#[command(name = "tamperlock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Ldpc {
    /// Number of parity checks, or "auto" for ceil(n/4).
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    row_weight: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// Detection score threshold.
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    bp_prior: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Label every word (or a uniform sample) under one key.
    VerifyImpossibility {
        #[command(flatten)]
        common: Common,
        /// hamming or prf-hamming
        #[arg(long)]
        code: Option<String>,
        /// true to enumerate all words, false to sample.
        #[arg(long)]
        exact: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Tamper detection and soundness across a grid of change fractions.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated change fractions in (0, 1).
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Rate at which uniform words escape the invalid label.
    Soundness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        code: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// LDPC detection rate after BP over a grid of flip rates.
    BpCurve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ldpc: Ldpc,
        /// Comma-separated flip rates in [0, 0.5].
        #[arg(long)]
        grid: Option<String>,
    },
    /// Run one preset attack scenario.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ldpc: Ldpc,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Write a Hamming key file or an LDPC parity matrix.
    Keygen {
        #[command(flatten)]
        common: Common,
        /// hamming or ldpc
        #[arg(long)]
        code: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        rows: Option<String>,
        #[arg(long)]
        row_weight: Option<String>,
    },
    /// Encode a few words with the PRF-masked Hamming code.
    MaskDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        count: Option<String>,
        /// Durable counter file; an in-memory counter when absent.
        #[arg(long)]
        counter: Option<String>,
    },
}

struct Request {
    subcommand: &'static str,
    config: Option<PathBuf>,
    flags: Vec<(String, String)>,
}

fn push(flags: &mut Vec<(String, String)>, key: &str, value: Option<String>) {
    if let Some(v) = value {
        flags.push((key.to_string(), v));
    }
}

impl Common {
    fn into_flags(self, flags: &mut Vec<(String, String)>) -> Option<PathBuf> {
        push(flags, "n", self.n);
        push(flags, "q", self.q);
        push(flags, "delta", self.delta);
        push(flags, "trials", self.trials);
        push(flags, "seed", self.seed);
        push(flags, "out", self.out);
        self.config
    }
}

impl Ldpc {
    fn into_flags(self, flags: &mut Vec<(String, String)>) {
        push(flags, "rows", self.rows);
        push(flags, "row-weight", self.row_weight);
        push(flags, "max-iters", self.max_iters);
        push(flags, "threshold", self.threshold);
        push(flags, "bp-prior", self.bp_prior);
    }
}

impl Command {
    fn into_request(self) -> Request {
        let mut f = Vec::new();
        let (subcommand, common) = match self {
            Command::VerifyImpossibility { common, code, exact, lambda } => {
                push(&mut f, "code", code);
                push(&mut f, "exact", exact);
                push(&mut f, "lambda", lambda);
                ("verify-impossibility", common)
            }
            Command::Sweep { common, alphas, lambda } => {
                push(&mut f, "alphas", alphas);
                push(&mut f, "lambda", lambda);
                ("sweep", common)
            }
            Command::Soundness { common, code, lambda } => {
                push(&mut f, "code", code);
                push(&mut f, "lambda", lambda);
                ("soundness", common)
            }
            Command::BpCurve { common, ldpc, grid } => {
                ldpc.into_flags(&mut f);
                push(&mut f, "grid", grid);
                ("bp-curve", common)
            }
            Command::Attack { common, ldpc, scenario } => {
                ldpc.into_flags(&mut f);
                push(&mut f, "scenario", scenario);
                ("attack", common)
            }
            Command::Keygen { common, code, lambda, rows, row_weight } => {
                push(&mut f, "code", code);
                push(&mut f, "lambda", lambda);
                push(&mut f, "rows", rows);
                push(&mut f, "row-weight", row_weight);
                ("keygen", common)
            }
            Command::MaskDemo { common, lambda, count, counter } => {
                push(&mut f, "lambda", lambda);
                push(&mut f, "count", count);
                push(&mut f, "counter", counter);
                ("mask-demo", common)
            }
        };
        let mut flags = Vec::new();
        let config = common.into_flags(&mut flags);
        flags.extend(f);
        Request { subcommand, config, flags }
    }
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_ASSERTION: u8 = 2;
const EXIT_USAGE: u8 = 3;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Counter(_) => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

fn execute(req: Request) -> Result<bool, Error> {
    let file = match &req.config {
        Some(path) => parse_config_file(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let config = RunConfig::resolve(req.subcommand, &file, &req.flags)?;
    let outcome = match config.out() {
        Some(path) => {
            let file = File::create(path)?;
            if config.subcommand() == "keygen" {
                restrict_permissions(&file)?;
            }
            let mut w = BufWriter::new(file);
            let o = run(&config, &mut w)?;
            w.flush()?;
            o
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let o = run(&config, &mut w)?;
            w.flush()?;
            o
        }
    };
    eprintln!("{}: {} [config {}]", config.subcommand(), outcome.summary, config.hash());
    Ok(outcome.ok)
}

#[cfg(unix)]
fn restrict_permissions(file: &File) -> io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    file.set_permissions(std::fs::Permissions::from_mode(0o600))
}

#[cfg(not(unix))]
fn restrict_permissions(_: &File) -> io::Result<()> {
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command.into_request()) {
        Ok(true) => 0,
        Ok(false) => EXIT_ASSERTION,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run_cli(std::env::args_os()))
}
