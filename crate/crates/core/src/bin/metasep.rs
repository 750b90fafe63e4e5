use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metasep::experiments::{self, Command, RunOptions};
use metasep::risk::Workers;

#[derive(Parser)]
#[command(name = "metasep", version, about = "Meta-learning separation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reptile trajectory in reduced (a, b) coordinates.
    Dynamics(Common),
    /// Growth of a_T against its high-probability lower bound.
    Growth(Common),
    /// Convex versus two-layer sample complexity.
    Separation(Common),
    /// Cross-check closed forms against reference solvers.
    Verify(Common),
    /// Monte Carlo excess risk of one algorithm at one n.
    Risk(Common),
    /// Smallest grid n reaching a target excess risk.
    Nsearch(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file (flat object).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials, seeds or cases, depending on the command.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory [default: out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Perturb closed-form outputs in `verify` so its suites fail.
    #[arg(long)]
    inject_fault: bool,
    /// Config override, `key=value` (value parsed as JSON when possible). Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn options(cmd: Command, c: Common) -> metasep::Result<RunOptions> {
    let mut opts = RunOptions::new(c.out.unwrap_or_else(|| PathBuf::from("out").join(cmd.name())));
    if let Some(path) = &c.config {
        opts.config = experiments::load_config_file(path)?;
    }
    opts.overrides = c.set.iter().map(|s| experiments::parse_override(s)).collect::<metasep::Result<_>>()?;
    opts.seed = c.seed;
    opts.trials = c.trials;
    opts.workers = match c.workers {
        Some(0) => return Err(metasep::Error::Config("--workers must be at least 1".into())),
        Some(n) => n,
        None => Workers::available()?.threads(),
    };
    opts.inject_fault = c.inject_fault;
    Ok(opts)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.cmd {
        Cmd::Dynamics(c) => (Command::Dynamics, c),
        Cmd::Growth(c) => (Command::Growth, c),
        Cmd::Separation(c) => (Command::Separation, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Risk(c) => (Command::Risk, c),
        Cmd::Nsearch(c) => (Command::Nsearch, c),
    };
    let result = options(cmd, common).and_then(|opts| experiments::run(cmd, &opts));
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for path in &report.outputs {
                log::info!("wrote {}", path.display());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("metasep {}: {e}", cmd.name());
            ExitCode::from(experiments::exit_code_for(&e) as u8)
        }
    }
}
