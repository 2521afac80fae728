//! `randlochs`: batch driver for cylinder, Lochs and entropy experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 failed `check`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "randlochs", version, about = "Cylinder, Lochs and fiber-entropy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; stdout when absent and the config names none.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Digits and orbit of one point.
    Digits,
    /// Cylinder trajectory of one point.
    Cylinder,
    /// Monte Carlo estimate of m(n)/n.
    Lochs,
    /// SMB, Rokhlin and plug-in entropy estimates.
    Entropy,
    /// CLT-property and Lochs CLT checks.
    Clt,
    /// Oracle equivalence suite.
    Check,
    /// Closed-form constants.
    Constants,
}

enum Failure {
    Config(String),
    Runtime(String),
    Check,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<randlochs::Error> for Failure {
    fn from(e: randlochs::Error) -> Self {
        match e {
            randlochs::Error::InvalidArgument(m) => Failure::Config(m),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let loaded = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(&p.to_string_lossy())?),
        None => None,
    };
    let (cfg, src) = match loaded {
        Some((mut c, src)) => {
            if let Some(s) = cli.seed {
                c.set_seed(s);
            }
            (Some(c), src)
        }
        None if matches!(cli.command, Command::Constants) => (None, String::new()),
        None => return Err(Failure::Config("--config is required for this command".into())),
    };
    let resolved = match &cfg {
        Some(c) => Some(c.resolve(&src)?),
        None => None,
    };
    let echo = cfg.as_ref().map(|c| c.echo_json());
    let format = cli.format.or(cfg.as_ref().and_then(|c| c.format())).unwrap_or(Format::Csv);
    let out_dir = cli.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.out_dir()).map(PathBuf::from));

    let outcome = match (cli.command, &resolved, &echo) {
        (Command::Constants, r, e) => commands::constants(r.as_ref(), e.as_ref())?,
        (cmd, Some(r), Some(e)) => match cmd {
            Command::Digits => commands::digits(r, e, format)?,
            Command::Cylinder => commands::cylinder(r, e, format)?,
            Command::Lochs => commands::lochs(r, e, format)?,
            Command::Entropy => commands::entropy(r, e, format)?,
            Command::Clt => commands::clt(r, e, format)?,
            Command::Check => commands::check(r, e, format)?,
            Command::Constants => unreachable!(),
        },
        _ => unreachable!("config presence checked above"),
    };

    for line in &outcome.console {
        if out_dir.is_some() || matches!(cli.command, Command::Constants) {
            emit(&format!("{line}\n"));
        } else {
            eprintln!("{line}");
        }
    }
    match &out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            for a in &outcome.artifacts {
                let p = dir.join(&a.name);
                std::fs::write(&p, &a.body).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            }
            if let Some(c) = &cfg {
                let p = dir.join("config_echo.toml");
                std::fs::write(&p, c.echo_toml()).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            }
        }
        None if !matches!(cli.command, Command::Constants) => {
            for a in &outcome.artifacts {
                emit(&format!("# {}\n", a.name));
                emit(&a.body);
            }
        }
        None => {}
    }
    if outcome.check_failed {
        return Err(Failure::Check);
    }
    Ok(())
}

/// Writes to stdout; a closed reader (`| head`) ends the process quietly.
fn emit(s: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_all(s.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(3);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Check) => {
            eprintln!("check failed");
            ExitCode::from(4)
        }
    }
}
