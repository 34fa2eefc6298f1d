use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use egw::ModelId;
use egw_cli::commands::bench::{BenchMethod, BenchSpec, GraphKind};
use egw_cli::commands::fit::{FitSpec, InputKind};
use egw_cli::commands::replicate::ReplicateSpec;
use egw_cli::commands::simulate::SimulateSpec;
use egw_cli::config::Settings;
use egw_cli::{env_threads, execute, rerun, with_pool, CliError, CliResult, RunSpec};

#[derive(Parser)]
#[command(
    name = "egw",
    version,
    about = "Gaussian graphical model structure learning with an empirical G-Wishart prior"
)]
struct Cli {
    /// Worker threads (overrides EGW_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ground-truth model and Gaussian data
    Simulate {
        /// ar1, ar2, star, random (or 1-4)
        #[arg(long)]
        model: ModelId,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample graphs from the marginal posterior of a data set
    Fit {
        /// CSV of observations (rows) or of a sample covariance
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = InputKind::Data)]
        input_kind: InputKind,
        /// Sample size, required for covariance input
        #[arg(long)]
        n: Option<usize>,
        /// key = value configuration file; flags take precedence
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the score decomposition of every retained graph
        #[arg(long)]
        dump_scores: bool,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare normalising-constant methods over a grid of p and delta
    NormconstBench {
        #[arg(long, value_enum)]
        graph_kind: GraphKind,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "4,6,8,10,12,14,16,18,20,22,24,26,28,30"
        )]
        delta: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "laplace")]
        methods: Vec<BenchMethod>,
        #[arg(long, default_value_t = 10_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated simulate-and-fit runs scored against the truth
    Replicate {
        #[arg(long)]
        model: ModelId,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a run from its manifest
    Rerun {
        /// Output directory or manifest file of the original run
        manifest: PathBuf,
        /// Where to write (default: the original directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail unless every output matches the original bit for bit
        #[arg(long)]
        check: bool,
    },
}

fn layered(config: Option<PathBuf>, flags: Settings) -> CliResult<Settings> {
    let base = match config {
        Some(path) => Settings::from_file(&path)?,
        None => Settings::default(),
    };
    Ok(base.overlay(flags))
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads.or_else(env_threads);
    let (spec, out) = match cli.command {
        Command::Simulate {
            model,
            p,
            n,
            seed,
            out,
        } => (RunSpec::Simulate(SimulateSpec { model, p, n, seed }), out),
        Command::Fit {
            data,
            input_kind,
            n,
            config,
            dump_scores,
            settings,
            out,
        } => {
            let settings = layered(config, settings)?.resolve()?;
            (
                RunSpec::Fit(FitSpec::new(&data, input_kind, n, settings, dump_scores)?),
                out,
            )
        }
        Command::NormconstBench {
            graph_kind,
            p,
            delta,
            methods,
            mc_samples,
            reps,
            seed,
            out,
        } => {
            let spec = BenchSpec {
                graph_kind,
                p_list: p,
                delta_list: delta,
                methods,
                mc_samples,
                reps,
                seed,
            };
            (RunSpec::NormconstBench(spec), out)
        }
        Command::Replicate {
            model,
            p,
            n,
            reps,
            master_seed,
            config,
            settings,
            out,
        } => {
            let settings = layered(config, settings)?.resolve()?;
            let spec = ReplicateSpec {
                model,
                p,
                n,
                reps,
                seed: master_seed,
                settings,
            };
            (RunSpec::Replicate(spec), out)
        }
        Command::Rerun {
            manifest,
            out,
            check,
        } => {
            let (m, diff) = with_pool(threads, || rerun(&manifest, out))??;
            if diff.is_empty() {
                println!("{}: {} outputs reproduced", m.command, m.outputs.len());
            } else {
                for f in &diff {
                    eprintln!("differs: {f}");
                }
                if check {
                    return Err(CliError::Numeric(format!(
                        "{} outputs differ from the original run",
                        diff.len()
                    )));
                }
            }
            return Ok(());
        }
    };
    let m = with_pool(threads, || execute(&spec, &out))??;
    println!(
        "{}: wrote {} files to {}",
        m.command,
        m.outputs.len() + 1,
        out.display()
    );
    if let RunSpec::Replicate(_) = spec {
        let text = std::fs::read_to_string(out.join("replicate.csv"))?;
        if let Some(last) = text.lines().last() {
            println!("{last}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("egw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
