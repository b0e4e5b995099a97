//! `contest`: solve, certify and inspect optimal crowdsourcing contests.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use run::Failure;

#[derive(Parser)]
#[command(name = "contest", version, about = "Optimal rank-order and general crowdsourcing contests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; defaults to the config's `output.dir`, then `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the oracle seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured instance and write report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve, then certify against an oracle and write oracle.json.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Prize shares of the solved contest for ability profiles; writes allocation.json.
    Allocate {
        #[arg(long)]
        config: PathBuf,
        /// One comma-separated profile; may be repeated.
        #[arg(long, value_delimiter = ',', num_args = 1, action = clap::ArgAction::Append)]
        profile: Vec<String>,
        /// CSV file with one profile per line.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Tabulate F, f, output, allocation and virtual ability; writes curve.csv.
    Curve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the standard instance battery; writes battery.json.
    Battery,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    threads: usize,
    unix_time: u64,
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).map_err(|e| Failure::Input(e.to_string()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// `--profile` values arrive split on commas; a profile ends at each flag.
fn inline_profiles(matches: &clap::ArgMatches) -> Result<Vec<Vec<f64>>, Failure> {
    let Some((_, sub)) = matches.subcommand() else { return Ok(Vec::new()) };
    let Some(groups) = sub.get_occurrences::<String>("profile") else { return Ok(Vec::new()) };
    groups
        .map(|g| {
            g.map(|x| x.trim().parse::<f64>().map_err(|e| Failure::Input(format!("--profile {x:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn execute(cli: Cli, matches: &clap::ArgMatches) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Input(format!("--threads: {e}")))?;
    }
    let out_dir = |cfg: Option<&RunConfig>| {
        cli.out.clone().or_else(|| cfg.and_then(|c| c.output.dir.clone())).unwrap_or_else(|| PathBuf::from("."))
    };
    let (name, dir, file, text, failure) = match &cli.command {
        Command::Solve { config } => {
            let cfg = load(config)?;
            let (text, failure) = run::run_solve(&cfg, cli.seed)?;
            ("solve", out_dir(Some(&cfg)), "report.json", text, failure)
        }
        Command::Verify { config } => {
            let cfg = load(config)?;
            let (text, failure) = run::run_verify(&cfg, cli.seed)?;
            ("verify", out_dir(Some(&cfg)), "oracle.json", text, failure)
        }
        Command::Allocate { config, profiles, .. } => {
            let cfg = load(config)?;
            let mut all = inline_profiles(matches)?;
            if let Some(path) = profiles {
                let source = path.display().to_string();
                let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{source}: {e}")))?;
                all.extend(run::parse_profiles(&text, &source)?);
            }
            if all.is_empty() {
                return Err(Failure::Input("allocate needs --profile or --profiles".into()));
            }
            ("allocate", out_dir(Some(&cfg)), "allocation.json", run::run_allocate(&cfg, &all)?, None)
        }
        Command::Curve { config } => {
            let cfg = load(config)?;
            ("curve", out_dir(Some(&cfg)), "curve.csv", run::run_curve(&cfg)?, None)
        }
        Command::Battery => {
            let (text, failure) = run::run_battery()?;
            ("battery", out_dir(None), "battery.json", text, failure)
        }
    };
    write(&dir, file, &text)?;
    let meta = Metadata {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    write(&dir, "metadata.json", &(serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"))?;
    if file.ends_with(".json") {
        print!("{text}");
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let command = <Cli as clap::CommandFactory>::command();
    let matches = match command.try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match <Cli as clap::FromArgMatches>::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("contest: {f}");
            ExitCode::from(f.code())
        }
    }
}
