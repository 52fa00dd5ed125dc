use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use market_frag::io::{load_config, run_command, RunConfig, Verb};
use market_frag::Error;

/// Agent-based multi-market double auctions and their fragmentation
/// analysis.
///
/// Exit status: 0 success, 2 configuration error, 3 numerical failure,
/// 4 I/O error. MARKET_FRAG_THREADS sets the worker thread count.
#[derive(Parser, Debug)]
#[command(name = "market-frag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-agent simulation: steady-state histograms and peaks, or
    /// aggregate series when `simulate.rounds` is set.
    Simulate(Common),
    /// Drift flow and fixed points of every class.
    Flow(Common),
    /// Bifurcation thresholds in 1/beta.
    Thresholds(Common),
    /// Minimal escape actions, paths and peak sizes.
    Action(Common),
    /// Phase diagram sweep over market bias and 1/beta.
    Phase(Common),
    /// Feasible loyalty-group patterns.
    Count {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Number of markets M.
        #[arg(short = 'M', long = "markets")]
        markets: Option<usize>,
        /// Number of trader classes C.
        #[arg(short = 'C', long = "classes")]
        classes: Option<usize>,
    },
}

const DEFAULT_COUNT_CONFIG: &str = r#"
markets = [0.5, 0.5, 0.5]

[[classes]]
p_buy = 0.8
inv_beta = 0.25

[[classes]]
p_buy = 0.2
inv_beta = 0.25
"#;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Io(_) | Error::Csv(_) => 4,
        _ => 3,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MARKET_FRAG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("MARKET_FRAG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn prepare(cli: Cli) -> Result<(Verb, RunConfig), Error> {
    let (verb, common) = match cli.command {
        Command::Simulate(c) => (Verb::Simulate, c),
        Command::Flow(c) => (Verb::Flow, c),
        Command::Thresholds(c) => (Verb::Thresholds, c),
        Command::Action(c) => (Verb::Action, c),
        Command::Phase(c) => (Verb::Phase, c),
        Command::Count {
            config,
            output,
            markets,
            classes,
        } => {
            let mut cfg = match config {
                Some(p) => load_config(p)?,
                None => RunConfig::from_toml(DEFAULT_COUNT_CONFIG)?,
            };
            if let Some(o) = output {
                cfg.output = o;
            }
            cfg.count.markets = markets.or(cfg.count.markets);
            cfg.count.classes = classes.or(cfg.count.classes);
            cfg.validate()?;
            return Ok((Verb::Count, cfg));
        }
    };
    let mut cfg = load_config(&common.config)?;
    if let Some(o) = common.output {
        cfg.output = o;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok((verb, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(&e);
    }
    let (verb, cfg) = match prepare(cli) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let bundle = run_command(verb, &cfg);
    if let Err(e) = bundle.write(&cfg.output) {
        return fail(&e);
    }
    for a in &bundle.manifest.artifacts {
        println!("{}", cfg.output.join(&a.file).display());
    }
    match &bundle.failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("outputs in {} are partial", cfg.output.display());
            fail(e)
        }
    }
}
