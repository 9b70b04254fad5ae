use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condorcet::attack::AttackKind;
use condorcet::batchorder::BatchScheme;
use condorcet::experiment::{
    parse_schemes, run_preset, run_single, write_preset, FileConfig, Preset, PresetName, PresetOptions,
};
use condorcet::netsim::AttackConfig;
use condorcet::Error;

/// Default output directory when neither `--out` nor the config file set one.
const OUT_ENV: &str = "CONDORCET_OUT";

#[derive(Parser, Debug)]
#[command(name = "condorcet", version, about = "Simulate the Condorcet attack on batch-order-fair ordering")]
struct Cli {
    /// Configuration file with `[sim]` and `[run]` tables; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment preset and write its CSV, summary and chart.
    Preset(PresetArgs),
    /// Run one simulation and dump orderings, logs, graph and final orders.
    Single(SingleArgs),
    /// List preset and scheme names.
    List,
}

#[derive(Args, Debug)]
struct PresetArgs {
    /// One of honest-env, attack-trap, reorder, non-injective,
    /// mitigate-ranked, mitigate-broadcast.
    name: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    /// Restrict to one committee size.
    #[arg(long)]
    n: Option<usize>,
    /// Honest transactions per run.
    #[arg(long)]
    honest: Option<usize>,
    /// Comma-separated batch schemes for presets that compare schemes.
    #[arg(long, alias = "schemes", value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SingleArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    r_internal: Option<f64>,
    /// Swap probability for consecutive burst transmissions.
    #[arg(long)]
    p: Option<f64>,
    /// Attack pause time.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, alias = "schemes", value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// two_tx, four_tx or none.
    #[arg(long)]
    attack: Option<String>,
    #[arg(long)]
    clones: Option<u32>,
    #[arg(long)]
    broadcast: bool,
    /// Honest transactions to send.
    #[arg(long)]
    honest: Option<usize>,
    /// Nodes reporting their orderings reversed.
    #[arg(long)]
    reversing: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.run.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn schemes(flag: Option<Vec<String>>, file: &FileConfig) -> Result<Option<Vec<BatchScheme>>, Error> {
    flag.or_else(|| file.run.schemes.clone()).map(|names| parse_schemes(&names)).transpose()
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn cmd_preset(args: PresetArgs, file: &FileConfig) -> Result<(), Error> {
    let name: PresetName = args.name.parse()?;
    let opts = PresetOptions {
        trials: args.trials.or(file.run.trials),
        points_per_decade: args.points_per_decade.or(file.run.points_per_decade),
        n: args.n,
        honest_count: args.honest,
        schemes: schemes(args.scheme, file)?,
    };
    let preset = Preset::build(name, &opts)?;
    let seed = args.seed.unwrap_or(file.sim.seed);
    let output = run_preset(&preset, seed)?;
    print_files(&write_preset(&preset, &output, &out_dir(args.out, file))?);
    Ok(())
}

fn cmd_single(args: SingleArgs, file: &FileConfig) -> Result<(), Error> {
    let mut cfg = file.sim.clone();
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.r {
        cfg.r = v;
    }
    if let Some(v) = args.r_internal {
        cfg.r_internal = v;
    }
    if let Some(v) = args.p {
        cfg.reorder_p = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.honest {
        cfg.honest_count = v;
    }
    if let Some(v) = args.reversing {
        cfg.reversing = v;
    }
    if args.broadcast {
        cfg.broadcast = true;
    }
    match args.attack.as_deref() {
        Some("none") => cfg.attack = None,
        Some(kind) => {
            let kind: AttackKind = kind.parse()?;
            cfg.attack.get_or_insert_with(AttackConfig::default).kind = kind;
        }
        None => {}
    }
    if args.tau.is_some() || args.clones.is_some() {
        if args.attack.as_deref() == Some("none") {
            return Err(Error::InvalidConfig("--tau and --clones need an attack".into()));
        }
        let attack = cfg.attack.get_or_insert_with(AttackConfig::default);
        if let Some(v) = args.tau {
            attack.pause = v;
        }
        if let Some(v) = args.clones {
            attack.clones = v;
        }
    }
    let schemes = schemes(args.scheme, file)?.unwrap_or_else(|| vec![BatchScheme::RankedPairs]);
    let output = run_single(&cfg, &schemes, &out_dir(args.out, file))?;
    print_files(&output.files);
    Ok(())
}

fn cmd_list() {
    println!("presets:");
    for p in PresetName::ALL {
        println!("  {p}");
    }
    println!("schemes:");
    for s in BatchScheme::all() {
        println!("  {s}");
    }
}

fn load(path: Option<&Path>) -> Result<FileConfig, Error> {
    path.map(FileConfig::load).transpose().map(Option::unwrap_or_default)
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_) | Error::UnknownScheme(_) | Error::Parse(_) | Error::CommitteeTooSmall { .. } | Error::InvalidPlan(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Preset(args) => cmd_preset(args, &file),
        Command::Single(args) => cmd_single(args, &file),
        Command::List => {
            cmd_list();
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage(&e) { 1 } else { 2 })
        }
    }
}
