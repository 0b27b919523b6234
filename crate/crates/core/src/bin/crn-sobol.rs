use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crn_sobol::deterministic::Method;
use crn_sobol::harness::{self, CommandSpec, HarnessError, Mode, RunConfig};

#[derive(Parser)]
#[command(version, about = "Stochastic and deterministic Sobol' analysis of reaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model file
    #[arg(long)]
    model: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    atol: f64,
    /// ODE integrator; `auto` switches to Rodas4 when stiffness is detected
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    method: SolverArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dopri5,
    Rodas4,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Deterministic,
    Stochastic,
}

#[derive(Args)]
struct Seeds {
    #[arg(long, default_value_t = 1)]
    design_seed: u64,
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Sample trajectories at nominal rates, one CSV per replicate
    Simulate {
        #[command(flatten)]
        common: Common,
        /// System size multiplier, V = m * vnom
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        master_seed: u64,
    },
    /// Solve the reaction rate equations at nominal rates
    Rre {
        #[command(flatten)]
        common: Common,
    },
    /// Sobol' indices of the deterministic QoI or of frozen-noise stochastic QoIs
    Sobol {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 1024)]
        ns: usize,
        #[arg(long, default_value_t = 100)]
        ms: usize,
        #[command(flatten)]
        seeds: Seeds,
        /// Also write every QoI sample
        #[arg(long)]
        dump_samples: bool,
    },
    /// Stochastic index ensembles across system sizes
    Converge {
        #[command(flatten)]
        common: Common,
        /// Strictly increasing multipliers, e.g. 1,10,100
        #[arg(long, value_delimiter = ',', required = true)]
        m_list: Vec<f64>,
        #[arg(long, default_value_t = 1024)]
        ns: usize,
        #[arg(long, default_value_t = 100)]
        ms: usize,
        #[command(flatten)]
        seeds: Seeds,
        #[arg(long)]
        dump_samples: bool,
    },
    /// Fix parameters below a total-index threshold and compare QoI samples
    FixParams {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        threshold: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Base sample count of the deterministic screening
        #[arg(long, default_value_t = 1024)]
        ns: usize,
        /// Parameter draws for the comparison
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Realizations per parameter draw
        #[arg(long, default_value_t = 1)]
        ms: usize,
        #[command(flatten)]
        seeds: Seeds,
    },
    /// Re-run the command recorded in a manifest
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the recorded worker count
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn config(common: Common, command: CommandSpec) -> RunConfig {
    RunConfig {
        model: common.model,
        command,
        rtol: common.rtol,
        atol: common.atol,
        method: match common.method {
            SolverArg::Auto => Method::Auto,
            SolverArg::Dopri5 => Method::DormandPrince,
            SolverArg::Rodas4 => Method::Rodas4,
        },
        workers: common.workers,
        out: common.out,
    }
}

fn dispatch(cli: Cli) -> Result<harness::RunReport, HarnessError> {
    let cfg = match cli.command {
        Command::Replay { manifest, out, workers } => return harness::replay(&manifest, out, workers),
        Command::Simulate {
            common,
            m,
            replicates,
            master_seed,
        } => config(
            common,
            CommandSpec::Simulate {
                m,
                replicates,
                seed: master_seed,
            },
        ),
        Command::Rre { common } => config(common, CommandSpec::Rre),
        Command::Sobol {
            common,
            mode,
            m,
            ns,
            ms,
            seeds,
            dump_samples,
        } => config(
            common,
            CommandSpec::Sobol {
                mode: match mode {
                    ModeArg::Deterministic => Mode::Deterministic,
                    ModeArg::Stochastic => Mode::Stochastic,
                },
                m,
                n_s: ns,
                m_s: ms,
                design_seed: seeds.design_seed,
                master_seed: seeds.master_seed,
                dump_samples,
            },
        ),
        Command::Converge {
            common,
            m_list,
            ns,
            ms,
            seeds,
            dump_samples,
        } => config(
            common,
            CommandSpec::Converge {
                m_list,
                n_s: ns,
                m_s: ms,
                design_seed: seeds.design_seed,
                master_seed: seeds.master_seed,
                dump_samples,
            },
        ),
        Command::FixParams {
            common,
            threshold,
            m,
            ns,
            samples,
            ms,
            seeds,
        } => config(
            common,
            CommandSpec::FixParams {
                threshold,
                m,
                n_s: ns,
                n_samples: samples,
                m_s: ms,
                design_seed: seeds.design_seed,
                master_seed: seeds.master_seed,
            },
        ),
    };
    harness::run(&cfg)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("{note}");
            }
            for file in &report.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
