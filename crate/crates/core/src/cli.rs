//! The `attest` command line: run games, validate configs, inspect ledgers.
//!
//! Exit status: `0` when every check passes, `1` on a threshold breach or an
//! invalid ledger, `2` on usage errors, missing or invalid configs, and game
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::attribution::{read_ledger, write_ledger};
use crate::config::RunConfig;
use crate::games::{self, GameReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "attest",
    version,
    about = "Attribution and watermarking security games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a game and report whether its thresholds hold.
    Run {
        /// Game id; see `attest run --help` for the list.
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(games::GAMES))]
        game: String,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "ATTEST_JOBS")]
        jobs: Option<usize>,
        /// Directory for report.json, report.txt and ledger.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// Check a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Read a ledger file.
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
}

#[derive(Debug, Subcommand)]
enum LedgerAction {
    /// Print the ledger in canonical event-per-line form.
    Dump {
        file: PathBuf,
        /// Response length ℓ; inferred when absent.
        #[arg(long)]
        response_len: Option<usize>,
    },
    /// Parse the ledger and summarize it.
    Check {
        file: PathBuf,
        #[arg(long)]
        response_len: Option<usize>,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_PASS;
        }
    };
    match cli.command {
        Command::Run {
            game,
            config,
            seed,
            jobs,
            out: dir,
            json,
        } => run(&game, &config, seed, jobs, dir, json, out, err),
        Command::Validate { config } => validate(&config, out, err),
        Command::Ledger { action } => ledger(action, out, err),
    }
}

const USAGE: &str = "usage: attest run <game> --config <file> [--seed N] [--jobs J] [--out dir]\n       attest validate --config <file>\n       attest ledger {dump|check} <file>\n";

fn load_config(path: &Path, game: Option<&str>, err: &mut dyn Write) -> Option<RunConfig> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read config {}: {e}", path.display());
            let _ = write!(err, "{USAGE}");
            return None;
        }
    };
    let cfg: RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: config {}: {e}", path.display());
            return None;
        }
    };
    if let Err(errs) = cfg.validate(game) {
        let _ = writeln!(err, "error: invalid config {}:", path.display());
        for e in &errs.0 {
            let _ = writeln!(err, "  - {e}");
        }
        return None;
    }
    Some(cfg)
}

fn time_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

#[allow(clippy::too_many_arguments)]
fn run(
    game: &str,
    config: &Path,
    seed: Option<u64>,
    jobs: Option<usize>,
    dir: Option<PathBuf>,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(cfg) = load_config(config, Some(game), err) else {
        return EXIT_USAGE;
    };
    let seed = match seed.or(cfg.game.seed) {
        Some(s) => s,
        None => {
            let s = time_seed();
            let _ = writeln!(
                err,
                "WARNING: no seed given; using time-derived seed {s}. \
                 Results are not reproducible without --seed or game.seed."
            );
            s
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start {jobs:?} workers: {e}");
            return EXIT_USAGE;
        }
    };
    let setup = cfg.setup(seed);
    let report = match pool.install(|| games::run_game(game, &setup, cfg.params())) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {game}: {e}");
            return EXIT_USAGE;
        }
    };
    let dir = dir.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from));
    if let Some(dir) = dir {
        if let Err(e) = write_artifacts(&dir, &report, cfg.output.ledger) {
            let _ = writeln!(err, "error: writing to {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    }
    let _ = write!(
        out,
        "{}",
        if json {
            report.emit_json()
        } else {
            report.emit_text()
        }
    );
    if report.passed() {
        EXIT_PASS
    } else {
        let _ = writeln!(
            err,
            "FAIL: {game}: thresholds breached: {}",
            report.failed_checks().join(", ")
        );
        EXIT_BREACH
    }
}

fn write_artifacts(dir: &Path, report: &GameReport, ledger: bool) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.emit_json())?;
    fs::write(dir.join("report.txt"), report.emit_text())?;
    if ledger {
        if let Some(l) = &report.ledger {
            fs::write(dir.join("ledger.jsonl"), write_ledger(l))?;
        }
    }
    Ok(())
}

fn validate(config: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load_config(config, None, err) {
        Some(cfg) => {
            let _ = writeln!(
                out,
                "ok: {} (game: {}, seed: {})",
                config.display(),
                cfg.game.game.as_deref().unwrap_or("-"),
                cfg.game
                    .seed
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "none; runs will be time-seeded".into())
            );
            EXIT_PASS
        }
        None => EXIT_USAGE,
    }
}

fn ledger(action: LedgerAction, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (file, response_len, dump) = match action {
        LedgerAction::Dump { file, response_len } => (file, response_len, true),
        LedgerAction::Check { file, response_len } => (file, response_len, false),
    };
    let text = match fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read ledger {}: {e}", file.display());
            let _ = write!(err, "{USAGE}");
            return EXIT_USAGE;
        }
    };
    let ledger = match read_ledger(&text, response_len) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", file.display());
            return EXIT_BREACH;
        }
    };
    let canonical = write_ledger(&ledger);
    if dump {
        let _ = write!(out, "{canonical}");
    } else {
        let _ = writeln!(
            out,
            "ok: {} transcripts, response length {}, clock {}, {}",
            ledger.transcripts().len(),
            ledger.response_len(),
            ledger.clock(),
            if canonical == text {
                "canonical"
            } else {
                "not canonical"
            }
        );
    }
    EXIT_PASS
}
