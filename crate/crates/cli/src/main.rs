use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lesde::dynamics::{integrate_ode, simulate_discrete, simulate_sde, toy_trainer, InitSpec, Integrator, MeanTrajectory};
use lesde::estimation::{
    differentiate_strengths, estimate_ab_imodel, estimate_ab_lmodel, tail_report, Smoothing,
    TailVariant,
};
use lesde::experiments::{ExperimentConfig, SeriesTable};
use lesde::geometry::{collapse_report, means_at, separation_probability};
use lesde::io::{
    load_config, read_trajectory_file, write_run, write_table, write_trajectory, RunConfig, SimulationMode,
    TrajectoryFile,
};
use lesde::Error;

#[derive(Parser)]
#[command(name = "lesde", version, about = "Locally elastic stochastic dynamics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    I,
    L,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Strength,
    Integrated,
}

#[derive(clap::Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Trajectory CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "i")]
    model: Model,
    #[arg(long, default_value_t = 21)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long, value_enum, default_value = "integrated")]
    variant: Variant,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and write per-trial class means as trajectory CSV.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the toy softmax classifier and write its logit trajectories.
    TrainToy {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate integrated and instantaneous strengths from a trajectory.
    Estimate {
        #[command(flatten)]
        args: EstimateArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Separation probability over time.
    Separate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collapse geometry of the class means of a trajectory.
    Collapse {
        #[arg(long)]
        input: PathBuf,
        /// Report at the grid point nearest this time (default: the last).
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Imitation experiment.
    Imitate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Phase-transition sweep.
    Phase {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Simulate-then-estimate round trip.
    Roundtrip {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Label-corruption experiment on the toy trainer.
    Corrupt {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Parse and validate any config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(args: &ConfigArgs, expected: &str) -> anyhow::Result<RunConfig> {
    let mut cfg = load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if cfg.kind() != expected {
        return Err(Error::Config(format!("expected a {expected} config, found {}", cfg.kind())).into());
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

fn table_bytes(table: &SeriesTable) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_table(&mut buf, table)?;
    Ok(buf)
}

fn trajectory_bytes(file: &TrajectoryFile) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, file)?;
    Ok(buf)
}

fn run_experiment(args: &ConfigArgs, kind: &str, out: &Path) -> anyhow::Result<()> {
    let cfg = load(args, kind)?;
    let exp: ExperimentConfig = cfg.experiment().ok_or_else(|| anyhow!("{kind} is not an experiment"))?;
    let output = exp.run()?;
    let dir = write_run(out, &exp, &output)?;
    eprintln!("wrote {}", dir.display());
    emit(None, &json_bytes(&output.report)?)
}

fn estimate(args: &EstimateArgs, format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    let traj = read_trajectory_file(&args.input)?.mean()?;
    let ab = match args.model {
        Model::I => estimate_ab_imodel(&traj, traj.k)?,
        Model::L => estimate_ab_lmodel(&traj)?,
    };
    let st = differentiate_strengths(&ab, Smoothing::new(args.window, args.order))?;
    let tail = match (args.t1, args.t2) {
        (Some(t1), Some(t2)) => Some(match args.variant {
            Variant::Integrated => tail_report(&ab.a_hat, &ab.b_hat, &ab.grid, t1, t2, TailVariant::FromIntegrated)?,
            Variant::Strength => tail_report(&st.alpha_hat, &st.beta_hat, &st.grid, t1, t2, TailVariant::FromStrength)?,
        }),
        (None, None) => None,
        _ => bail!(Error::InvalidArgument("--t1 and --t2 must be given together".into())),
    };
    match format {
        Format::Json => emit(out, &json_bytes(&serde_json::json!({ "ab": ab, "strengths": st, "tail": tail }))?),
        Format::Csv => {
            let table = SeriesTable::from_columns(
                "strengths",
                &ab.grid,
                &[("a_hat", &ab.a_hat), ("b_hat", &ab.b_hat), ("alpha_hat", &st.alpha_hat), ("beta_hat", &st.beta_hat)],
            );
            if let Some(t) = tail {
                eprintln!("tail index: r_alpha={} r_beta={} r_gamma={}", t.r_alpha, t.r_beta, t.r_gamma);
            }
            emit(out, &table_bytes(&table)?)
        }
    }
}

fn min_cosine(c: &Option<Vec<f64>>) -> f64 {
    c.as_ref().map_or(f64::NAN, |v| v.iter().copied().fold(f64::INFINITY, f64::min))
}

fn collapse(traj: &MeanTrajectory, time: Option<f64>, format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    match format {
        Format::Json => {
            let ti = time.map_or(traj.len() - 1, |t| traj.nearest_index(t));
            let report = collapse_report(&means_at(traj, ti))?;
            emit(out, &json_bytes(&serde_json::json!({ "t": traj.grid[ti], "report": report }))?)
        }
        Format::Csv => {
            let mut table = SeriesTable::new("collapse", vec!["t".into(), "etf_deviation".into(), "min_cosine_to_d".into()]);
            for ti in 0..traj.len() {
                let r = collapse_report(&means_at(traj, ti))?;
                table.rows.push(vec![traj.grid[ti], r.etf_deviation, min_cosine(&r.cosine_to_d)]);
            }
            emit(out, &table_bytes(&table)?)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { cfg, out } => {
            let RunConfig::Simulate(c) = load(&cfg, "Simulate")? else { unreachable!() };
            let file = match c.mode {
                SimulationMode::Sde | SimulationMode::Discrete => {
                    let f = if c.mode == SimulationMode::Sde { simulate_sde } else { simulate_discrete };
                    let ens = f(&c.drift, &c.schedule, &c.noise, &c.init, &c.grid, c.trials, c.seed)?;
                    TrajectoryFile::from_ensemble(&ens, "simulate")?
                }
                SimulationMode::Ode => {
                    let init = match &c.init {
                        InitSpec::Gaussian { means, .. } => means.clone(),
                        InitSpec::Fixed(e) => e.class_means(),
                    };
                    let traj = integrate_ode(&c.drift, &c.schedule, &init, &c.grid, Integrator::Rk4)?;
                    TrajectoryFile::from_mean(&traj, c.init.n(), "simulate-ode")?
                }
            };
            emit(out.as_deref(), &trajectory_bytes(&file)?)
        }
        Command::TrainToy { cfg, out } => {
            let RunConfig::TrainToy(c) = load(&cfg, "TrainToy")? else { unreachable!() };
            let run = toy_trainer(&c.toy, c.seed)?;
            eprintln!(
                "train accuracy {:.4}, validation accuracy {:.4}",
                run.mean_train_accuracy(),
                run.mean_val_accuracy()
            );
            let file = TrajectoryFile::from_ensemble(&run.ensemble, "toy")?;
            emit(out.as_deref(), &trajectory_bytes(&file)?)
        }
        Command::Estimate { args, format, out } => estimate(&args, format, out.as_deref()),
        Command::Separate { cfg, format, out } => {
            let RunConfig::Separate(c) = load(&cfg, "Separate")? else { unreachable!() };
            let prob = separation_probability(&c.separation, c.seed)?;
            match format {
                Format::Json => emit(out.as_deref(), &json_bytes(&prob)?),
                Format::Csv => {
                    let table = SeriesTable::from_columns(
                        "separation",
                        &prob.grid,
                        &[("probability", &prob.probability), ("half_width", &prob.half_width)],
                    );
                    emit(out.as_deref(), &table_bytes(&table)?)
                }
            }
        }
        Command::Collapse { input, time, format, out } => {
            let traj = read_trajectory_file(&input)?.mean()?;
            collapse(&traj, time, format, out.as_deref())
        }
        Command::Imitate { cfg, out } => run_experiment(&cfg, "Imitation", &out),
        Command::Phase { cfg, out } => run_experiment(&cfg, "PhaseSweep", &out),
        Command::Roundtrip { cfg, out } => run_experiment(&cfg, "RoundTrip", &out),
        Command::Corrupt { cfg, out } => run_experiment(&cfg, "LabelCorruption", &out),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("ok: {} config", cfg.kind());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
