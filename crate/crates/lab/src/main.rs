#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};
use kslab::commands::{cmd_blowup, cmd_simulate, cmd_validate, cmd_verify_lemmas, cmd_weak_residual};
use kslab::{ExitCode, LabError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "kslab", version, about = "Radial Keller-Segel blow-up laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the parameters and print the feasibility report.
    Validate(Common),
    /// Solve the regularised problem, or a sweep over eps_list.
    Simulate(Common),
    /// Certify the test-function inequalities over a parameter grid.
    VerifyLemmas(Common),
    /// Run the blow-up pipeline and write its report.
    Blowup(Common),
    /// Measure the weak-form residual under refinement.
    WeakResidual(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and grids.
    #[arg(long)]
    threads: Option<usize>,
}

fn out_dir(config: &RunConfig, common: &Common, command: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| Path::new("out").join(command))
}

fn run(cli: Cli) -> Result<(), LabError> {
    let (name, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Simulate(c) => ("simulate", c),
        Command::VerifyLemmas(c) => ("verify-lemmas", c),
        Command::Blowup(c) => ("blowup", c),
        Command::WeakResidual(c) => ("weak-residual", c),
    };
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| LabError::Config(e.to_string()))?;
    }
    let config = RunConfig::load(&common.config)?;
    let dir = out_dir(&config, common, name);
    match cli.command {
        Command::Validate(_) => cmd_validate(&config).map(drop),
        Command::Simulate(_) => cmd_simulate(&config, &dir),
        Command::VerifyLemmas(_) => cmd_verify_lemmas(&config, &dir).map(drop),
        Command::Blowup(_) => cmd_blowup(&config, &dir).map(|o| {
            let s = &o.selection;
            println!("kappa   {}", s.kappa);
            println!("s0      {}", s.s0);
            println!("gamma   {} ({} doublings from {})", s.gamma, s.doublings, s.gamma_start);
            println!("y(t1)   {} >= {}", o.y.lower_bound.y_t1, o.y.lower_bound.bound);
            println!("report  {}", dir.join("blowup_report.json").display());
        }),
        Command::WeakResidual(_) => cmd_weak_residual(&config, &dir).map(|st| {
            for f in &st.fields {
                println!("field at {}: order {}", f.field.center, f.order);
            }
            println!("constant state: {} of scale", st.constant_relative);
        }),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Config } else { ExitCode::Ok };
            let _ = e.print();
            process::exit(code as i32);
        }
    };
    let code = match run(cli) {
        Ok(()) => ExitCode::Ok,
        Err(e) => {
            eprintln!("kslab: {e}");
            e.exit_code()
        }
    };
    process::exit(code as i32);
}
