use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use hypharm_cli::commands;
use hypharm_cli::config::{Experiment, RunConfig};
use hypharm_cli::output::{write_outcome, Outcome, WriteOptions};

/// Harmonic analysis and dispersive smoothing experiments on the hyperbolic plane.
#[derive(Parser)]
#[command(name = "hypharm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    output: OutputFlags,
    /// Seed for random families (overrides the config).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Double every grid count and the time horizon.
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Clone)]
struct OutputFlags {
    /// Output directory (overrides the config; default `hypharm-out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write JSON reports.
    #[arg(long)]
    json: bool,
    /// Also write SVG charts.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the c-function, the Plancherel density and symbol constants.
    Ctable(Common),
    /// Transform suite on a built-in or tabulated input.
    Transform {
        #[command(flatten)]
        common: Common,
        /// `gaussian_bump`, `zero`, `radial`, or the stem of a table pair.
        #[arg(long)]
        input: Option<String>,
    },
    /// Evolve the input and record norms and intertwining residuals.
    Propagate(Common),
    /// Smoothing estimates with the refinement-stability pass.
    Smoothing(Common),
    /// Gain-of-regularity estimates.
    Gain(Common),
    /// Trivial identities and fast reference checks.
    Selftest {
        #[command(flatten)]
        output: OutputFlags,
        /// Seed a wrong c-function constant (the normalization check must fail).
        #[arg(long, hide = true)]
        corrupt_c0: bool,
    },
}

fn load(
    common: &Common,
    experiment: Experiment,
    input: Option<String>,
) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(e) = cfg.experiment {
        if e != experiment {
            anyhow::bail!("config is for `{e}`, not `{experiment}`");
        }
    }
    cfg.experiment = Some(experiment);
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.output.out {
        cfg.out = Some(out.clone());
    }
    if let Some(input) = input {
        cfg.transform.input = input;
    }
    cfg.refine |= common.refine;
    Ok(cfg)
}

fn emit(
    stem: &str,
    outcome: &Outcome,
    out: PathBuf,
    flags: &OutputFlags,
    hash: Option<String>,
) -> anyhow::Result<bool> {
    for r in &outcome.reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {} {} ratio={:.6e}",
            r.experiment, r.family, r.ratio
        );
    }
    for f in &outcome.failures {
        eprintln!("FAIL {f}");
    }
    let opts = WriteOptions {
        json: flags.json,
        svg: flags.svg,
        config_hash: hash,
    };
    for p in write_outcome(stem, outcome, &out, &opts)? {
        eprintln!("wrote {}", p.display());
    }
    let pass = outcome.pass();
    println!("{} {stem}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common, input) = match cli.command {
        Command::Selftest { output, corrupt_c0 } => {
            let result = commands::selftest(corrupt_c0).and_then(|o| {
                for row in &o.tables[0].rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            hypharm_cli::output::Cell::Num(x) => format!("{x:.3e}"),
                            hypharm_cli::output::Cell::Text(s) => s.clone(),
                        })
                        .collect();
                    println!(
                        "{} {} value={} limit={}",
                        cells[4], cells[0], cells[1], cells[2]
                    );
                }
                emit(
                    "selftest",
                    &o,
                    output.out.clone().unwrap_or_else(|| "hypharm-out".into()),
                    &output,
                    None,
                )
            });
            return finish(result);
        }
        Command::Ctable(c) => (Experiment::Ctable, c, None),
        Command::Transform { common, input } => (Experiment::Transform, common, input),
        Command::Propagate(c) => (Experiment::Propagate, c, None),
        Command::Smoothing(c) => (Experiment::Smoothing, c, None),
        Command::Gain(c) => (Experiment::Gain, c, None),
    };
    let cfg = match load(&common, experiment, input) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
    };
    let out = cfg.out.clone().unwrap_or_else(|| "hypharm-out".into());
    let result = commands::run(experiment, &cfg).and_then(|o| {
        emit(
            &experiment.to_string(),
            &o,
            out,
            &common.output,
            Some(cfg.hash()),
        )
    });
    finish(result)
}

fn finish(result: anyhow::Result<bool>) -> ExitCode {
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
