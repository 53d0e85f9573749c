use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use apkam::cli::{
    compare_golden, read_config, read_trace, run, write_outcome, GoldenTolerances, RunConfig,
    RunOutcome, Scenario, Verdict,
};

#[derive(Parser)]
#[command(name = "apkam", version, about = "Invariant curves of almost periodic twist maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run config; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the trace and artifact tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    SolveHomological(Common),
    KamStep(Common),
    KamRun(Common),
    DiophScan(Common),
    SmallTwist {
        #[command(subcommand)]
        action: SmallTwistAction,
    },
    Oscillator {
        #[command(subcommand)]
        action: OscillatorAction,
    },
    Golden {
        #[command(subcommand)]
        action: GoldenAction,
    },
}

#[derive(Subcommand)]
enum SmallTwistAction {
    Avg(Common),
    Split(Common),
    Chart(Common),
}

#[derive(Subcommand)]
enum OscillatorAction {
    Simulate(Common),
    Poincare(Common),
    Expansion(Common),
    Bounded(Common),
    Resonant(Common),
}

#[derive(Subcommand)]
enum GoldenAction {
    /// Runs the config and stores its trace as `golden.toml` under `--out`.
    Record(Common),
    /// Reruns the config and compares against a stored trace.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        golden: PathBuf,
    },
}

fn load(common: &Common, scenario: Option<Scenario>) -> Result<RunConfig> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match (&common.config, scenario) {
        (Some(p), _) => read_config(p)?,
        (None, Some(s)) => RunConfig::for_scenario(s),
        (None, None) => bail!("--config is required here"),
    };
    if let Some(s) = scenario {
        if cfg.scenario != s {
            bail!("config is for scenario {}, not {s}", cfg.scenario);
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report(outcome: &RunOutcome, out: Option<&Path>) -> Result<()> {
    let t = &outcome.trace;
    println!("scenario {} verdict {} config-sha256 {}", t.scenario, t.verdict, t.config_hash);
    for (k, v) in &t.summary {
        println!("  {k} = {v:.16e}");
    }
    for n in &t.notes {
        println!("  note: {n}");
    }
    if let Some(dir) = out {
        write_outcome(outcome, dir)?;
        println!("artifacts in {}", dir.display());
    }
    Ok(())
}

fn execute(common: &Common, scenario: Scenario) -> Result<Verdict> {
    let cfg = load(common, Some(scenario))?;
    let outcome = run(&cfg)?;
    report(&outcome, common.out.as_deref())?;
    Ok(outcome.trace.verdict)
}

fn main_inner() -> Result<Verdict> {
    let cli = Cli::parse();
    match cli.command {
        Command::SolveHomological(c) => execute(&c, Scenario::Homological),
        Command::KamStep(c) => execute(&c, Scenario::KamStep),
        Command::KamRun(c) => execute(&c, Scenario::KamRun),
        Command::DiophScan(c) => execute(&c, Scenario::DiophScan),
        Command::SmallTwist { action } => match action {
            SmallTwistAction::Avg(c) => execute(&c, Scenario::SmallTwistAvg),
            SmallTwistAction::Split(c) => execute(&c, Scenario::SmallTwistSplit),
            SmallTwistAction::Chart(c) => execute(&c, Scenario::SmallTwistChart),
        },
        Command::Oscillator { action } => match action {
            OscillatorAction::Simulate(c) => execute(&c, Scenario::OscillatorSimulate),
            OscillatorAction::Poincare(c) => execute(&c, Scenario::OscillatorPoincare),
            OscillatorAction::Expansion(c) => execute(&c, Scenario::OscillatorExpansion),
            OscillatorAction::Bounded(c) => execute(&c, Scenario::OscillatorBounded),
            OscillatorAction::Resonant(c) => execute(&c, Scenario::OscillatorResonant),
        },
        Command::Golden { action } => match action {
            GoldenAction::Record(c) => {
                let cfg = load(&c, None)?;
                let outcome = run(&cfg)?;
                report(&outcome, c.out.as_deref())?;
                let dir = c.out.as_deref().unwrap_or(Path::new("."));
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("golden.toml"), outcome.trace.to_toml())?;
                Ok(outcome.trace.verdict)
            }
            GoldenAction::Check { common, golden } => {
                let cfg = load(&common, None)?;
                let outcome = run(&cfg)?;
                report(&outcome, common.out.as_deref())?;
                let gold = read_trace(&golden)?;
                let rep = compare_golden(&outcome.trace, &gold, &GoldenTolerances::default())?;
                println!("golden: {} fields compared, {}", rep.compared, rep.verdict);
                for f in &rep.failures {
                    println!("  mismatch: {f}");
                }
                Ok(rep.verdict)
            }
        },
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(Verdict::Failed) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
