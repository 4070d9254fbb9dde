use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use taud::harness::{
    evaluate, initial_states, run_episode, run_training, write_trajectory, HarnessError, InputMode, TrainerConfig,
};
use taud::neural::Mlp;
use taud::plant::RngStream;
use taud::sac::Actor;
use taud::stl::{parse_spec, Formula, Trace};

#[derive(Parser)]
#[command(name = "taud", version, about = "Delay-aware reinforcement learning of controllers for STL tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy per seed and write metrics, plots and checkpoints.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Train only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_ablation)]
        ablation: Option<InputMode>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of environment steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Evaluate a saved policy with the deterministic action.
    Eval {
        /// Actor checkpoint file, or a checkpoint directory containing `actor.bin`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short = 'n', default_value_t = 100)]
        n: usize,
        #[arg(long, value_parser = parse_ablation)]
        ablation: Option<InputMode>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the first trajectory as CSV (t, x.., u.., reward).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate an STL formula on a CSV trace.
    Monitor {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        trace: PathBuf,
        /// Evaluation instant.
        #[arg(long, default_value_t = 0)]
        at: usize,
    },
}

fn parse_ablation(s: &str) -> Result<InputMode, String> {
    match s {
        "tau-mdp" | "no-preprocess" => s.parse(),
        other => Err(format!("unknown ablation '{other}' (expected tau-mdp or no-preprocess)")),
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Stl(#[from] taud::stl::StlError),
    #[error(transparent)]
    Neural(#[from] taud::neural::NeuralError),
    #[error(transparent)]
    Sac(#[from] taud::sac::SacError),
    #[error("{}: {msg}", path.display())]
    Trace { path: PathBuf, msg: String },
}

fn load_config(path: Option<&Path>) -> Result<TrainerConfig, CliError> {
    Ok(match path {
        Some(p) => TrainerConfig::load(p)?,
        None => TrainerConfig::default(),
    })
}

fn train(
    config: Option<PathBuf>,
    seed: Option<u64>,
    ablation: Option<InputMode>,
    out: Option<PathBuf>,
    steps: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config.as_deref())?;
    if let Some(s) = seed {
        cfg.run.seeds = vec![s];
    }
    if let Some(mode) = ablation {
        cfg.run.input = mode;
    }
    if let Some(n) = steps {
        cfg.run.total_steps = n;
    }
    let out = out.or_else(|| cfg.run.out_dir.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    let runs = run_training(&cfg, &out)?;
    for r in &runs {
        let f = &r.outcome.final_report;
        println!(
            "seed {}: steps {} mean_return {} success_rate {} -> {}",
            r.seed,
            r.outcome.steps,
            f.mean_return,
            f.success_rate,
            r.dir.display()
        );
    }
    Ok(())
}

fn eval(
    checkpoint: PathBuf,
    config: Option<PathBuf>,
    n: usize,
    ablation: Option<InputMode>,
    seed: u64,
    trace: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config.as_deref())?;
    if let Some(mode) = ablation {
        cfg.run.input = mode;
    }
    cfg.eval.episodes = n;
    let exp = cfg.resolve()?;
    let file = if checkpoint.is_dir() { checkpoint.join("actor.bin") } else { checkpoint };
    let actor = Actor::from_net(Mlp::load(&file)?, exp.model.action_low(), exp.model.action_high())?;
    if actor.state_dim() != exp.input_dim() {
        return Err(HarnessError::Config(format!(
            "checkpoint expects {} inputs but the configuration produces {}; check --ablation",
            actor.state_dim(),
            exp.input_dim()
        ))
        .into());
    }
    let initial = initial_states(&exp, n, &mut RngStream::derive(seed, 3));
    let noise_seed = RngStream::derive(seed, 4).next_u64();
    let report = evaluate(&actor, &exp, &initial, noise_seed, 0)?;
    println!("episodes {n}");
    println!("mean_return {}", report.mean_return);
    println!("success_rate {}", report.success_rate);
    if let Some(path) = trace {
        let tr = run_episode(&actor, &exp, initial[0].clone(), &mut RngStream::derive(noise_seed, 0))?;
        write_trajectory(&path, &tr, &exp)?;
    }
    Ok(())
}

/// Reads the `x<i>` columns of a CSV file, or every column but `t` when
/// there are none.
fn read_trace(path: &Path) -> Result<Trace, CliError> {
    let err = |msg: String| CliError::Trace { path: path.into(), msg };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = r.headers().map_err(|e| err(e.to_string()))?.clone();
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(c, h)| h.trim().strip_prefix('x').and_then(|i| i.parse().ok()).map(|i| (i, c)))
        .collect();
    cols.sort();
    if cols.is_empty() {
        cols = headers.iter().enumerate().filter(|(_, h)| h.trim() != "t").map(|(c, _)| (c, c)).collect();
    }
    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let x = cols
            .iter()
            .map(|&(_, c)| {
                let field = rec.get(c).unwrap_or("").trim();
                field.parse::<f64>().map_err(|_| err(format!("row {}: '{field}' is not a number", line + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        states.push(x);
    }
    Ok(Trace::new(states)?)
}

fn monitor(spec: &str, trace: &Path, at: usize) -> Result<(), CliError> {
    let signal = read_trace(trace)?;
    let spec = parse_spec(spec, signal.states()[0].len())?;
    let rho = spec.robustness(&signal, at)?;
    println!("tau {}", spec.tau());
    println!("horizon {}", spec.total_horizon());
    println!("robustness {rho}");
    println!("satisfied {}", rho >= 0.0);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, ablation, out, steps } => train(config, seed, ablation, out, steps),
        Command::Eval { checkpoint, config, n, ablation, seed, trace } => eval(checkpoint, config, n, ablation, seed, trace),
        Command::Monitor { spec, trace, at } => monitor(&spec, &trace, at),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
