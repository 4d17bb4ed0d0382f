use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphabp::convergence::{certify, theta_from_ising, theta_from_mrf};
use alphabp::experiments::{sweep_sigma, trajectory, SweepConfig, TrajectoryConfig};
use alphabp::inference::{
    edge_appearance_probabilities, exact_marginals, mean_field_run, run_alpha_bp, run_damped_bp,
    run_trw, AlphaAssignment, AnnealSchedule, BeliefResult, RunConfig,
};
use alphabp::io::{ising_to_json, read_model, ModelFile};
use alphabp::mimo::{ser_experiment, Algorithm, SerConfig};
use alphabp::randgen::{erdos_renyi, sample_certified, sample_ising, GraphSpec, PotentialSpec, Provenance};
use alphabp::{plot, report, Error};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_INPUT: u8 = 1;
const EXIT_NOT_CERTIFIED: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

#[derive(Parser)]
#[command(name = "alphabp", version, about = "Alpha belief propagation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence certificate of a binary model; exits 2 when it does not hold.
    Certify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs one inference algorithm on a model file.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        alpha: Option<f64>,
        /// Damping weight on the previous message.
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Linear alpha schedule `START:END` over the iteration budget.
        #[arg(long)]
        anneal: Option<String>,
        /// Seed for randomized initial messages (uniform otherwise).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean, min and max of lambda* over random models per (gamma, alpha, sigma).
    SweepSigma {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        gammas: String,
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        sigmas: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized message error per iteration against the final iterate.
    Trajectory {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long)]
        require_certified: bool,
        #[arg(long, default_value_t = 1000)]
        max_retries: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo symbol error rate of MIMO detectors.
    MimoSer {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        snr_db: String,
        #[arg(long, default_value_t = 10000)]
        trials: usize,
        #[arg(long)]
        algos: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Keep one channel matrix for all trials.
        #[arg(long)]
        fixed_channel: bool,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Renders a CSV produced by the other commands as an SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Lines)]
        kind: Kind,
        #[arg(long)]
        logy: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Samples a random Ising model and writes it as a model file.
    Generate {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Redraw until the certificate holds for this alpha.
        #[arg(long)]
        certified_alpha: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        max_retries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exact,
    Bp,
    AlphaBp,
    Damped,
    Mf,
    Trw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Lines,
}

enum Failure {
    Lib(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<u8, Failure>;

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<ModelFile, Failure> {
    read_model(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn round12(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Comma list or inclusive range. Ranges read as `start:step:stop`; when the
/// step would overshoot the range in one move, as `start:stop:step`.
fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Input(format!("cannot parse grid '{s}'"));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, a, b] = parts[..] else {
            return Err(bad());
        };
        let (step, stop) = if a > b - start { (b, a) } else { (a, b) };
        if !(step > 0.0) || stop < start {
            return Err(Failure::Input(format!("grid '{s}' needs a positive step and stop >= start")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| round12(start + i as f64 * step)).collect())
    } else {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if v.is_empty() {
            return Err(bad());
        }
        Ok(v)
    }
}

fn parse_anneal(s: &str, iterations: usize) -> Result<AnnealSchedule, Failure> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::Input(format!("--anneal expects START:END, got '{s}'")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Failure::Input(format!("bad anneal endpoint '{v}'")))
    };
    Ok(AnnealSchedule::new(parse(a)?, parse(b)?, iterations)?)
}

fn cmd_certify(model: &Path, alpha: f64, out: &Option<PathBuf>) -> CmdResult {
    let file = load(model)?;
    let (theta, graph) = match &file {
        ModelFile::Ising { model, .. } => (theta_from_ising(model), model.graph().clone()),
        ModelFile::General(mrf) => (theta_from_mrf(mrf)?, mrf.graph().clone()),
    };
    let cert = certify(&theta, &AlphaAssignment::uniform(&graph, alpha), &graph)?;
    emit(out, &(cert.to_json() + "\n"))?;
    Ok(if cert.theorem1_holds { 0 } else { EXIT_NOT_CERTIFIED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_infer(
    model: &Path,
    algo: Algo,
    alpha: Option<f64>,
    gamma: f64,
    max_iter: usize,
    tol: f64,
    anneal: &Option<String>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
) -> CmdResult {
    let mrf = load(model)?.to_mrf();
    let mut config = RunConfig {
        max_iterations: max_iter,
        tolerance: tol,
        seed,
        ..RunConfig::default()
    };
    if anneal.is_some() && !matches!(algo, Algo::AlphaBp) {
        return Err(Failure::Input("--anneal applies to alpha-bp only".into()));
    }
    let result: BeliefResult = match algo {
        Algo::Exact => BeliefResult {
            converged: true,
            iterations_used: 0,
            residual_trace: Vec::new(),
            marginals: exact_marginals(&mrf)?,
            final_messages: None,
        },
        // standard BP is the alpha = 1 member of the family
        Algo::Bp => run_alpha_bp(&mrf, &AlphaAssignment::uniform(mrf.graph(), 1.0), &config)?,
        Algo::AlphaBp => {
            if let Some(s) = anneal {
                config.anneal = Some(parse_anneal(s, max_iter)?);
            }
            let a = match (alpha, &config.anneal) {
                (Some(a), _) => a,
                (None, Some(sched)) => sched.alpha_start,
                (None, None) => return Err(Failure::Input("alpha-bp needs --alpha or --anneal".into())),
            };
            run_alpha_bp(&mrf, &AlphaAssignment::uniform(mrf.graph(), a), &config)?
        }
        Algo::Damped => run_damped_bp(&mrf, gamma, &config)?,
        Algo::Mf => mean_field_run(&mrf, &config)?,
        Algo::Trw => run_trw(&mrf, &edge_appearance_probabilities(mrf.graph())?, &config)?,
    };
    emit(out, &(result.to_json() + "\n"))?;
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Certify { model, alpha, out } => cmd_certify(&model, alpha, &out),
        Command::Infer {
            model,
            algo,
            alpha,
            gamma,
            max_iter,
            tol,
            anneal,
            seed,
            out,
        } => cmd_infer(&model, algo, alpha, gamma, max_iter, tol, &anneal, seed, &out),
        Command::SweepSigma {
            n,
            gammas,
            alphas,
            sigmas,
            trials,
            seed,
            out,
        } => {
            let config = SweepConfig {
                n,
                gammas: parse_grid(&gammas)?,
                alphas: parse_grid(&alphas)?,
                sigmas: parse_grid(&sigmas)?,
                trials,
                seed,
            };
            let rows = sweep_sigma(&config)?;
            emit(&out, &report::sweep_csv(&rows, n, seed))?;
            Ok(0)
        }
        Command::Trajectory {
            n,
            gamma,
            alpha,
            sigma,
            trials,
            iters,
            require_certified,
            max_retries,
            seed,
            out,
        } => {
            let mut config = TrajectoryConfig::new(n, gamma, alpha, sigma, trials, iters, seed);
            config.require_certified = require_certified;
            config.max_retries = max_retries;
            let run = trajectory(&config)?;
            let header = format!(
                "n={n} gamma={} alpha={} sigma={} trials={trials} iters={iters} certified={require_certified} seed={seed}",
                report::fmt_float(gamma),
                report::fmt_float(alpha),
                report::fmt_float(sigma)
            );
            emit(&out, &report::trajectory_csv(&run.rows, &header))?;
            Ok(0)
        }
        Command::MimoSer {
            n,
            snr_db,
            trials,
            algos,
            seed,
            fixed_channel,
            max_iter,
            tol,
            out,
        } => {
            let algorithms = algos
                .split(',')
                .map(|a| a.trim().parse::<Algorithm>())
                .collect::<Result<Vec<_>, _>>()?;
            let mut config = SerConfig::new(n, parse_grid(&snr_db)?, trials, algorithms, seed);
            config.fresh_channel = !fixed_channel;
            config.run.max_iterations = max_iter;
            config.run.tolerance = tol;
            let points = ser_experiment(&config)?;
            let header = format!(
                "n={n} trials={trials} seed={seed} channel={}",
                if fixed_channel { "fixed" } else { "fresh" }
            );
            emit(&out, &report::ser_csv(&points, &header))?;
            Ok(0)
        }
        Command::Plot { csv, kind, logy, out } => {
            let Kind::Lines = kind;
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", csv.display())))?;
            emit(&out, &plot::plot_csv(&text, logy)?)?;
            Ok(0)
        }
        Command::Generate {
            n,
            gamma,
            sigma,
            seed,
            certified_alpha,
            max_retries,
            out,
        } => {
            let gs = GraphSpec { n, gamma, seed };
            let ps = PotentialSpec { sigma, seed };
            let model = match certified_alpha {
                Some(alpha) => sample_certified(&gs, &ps, alpha, max_retries)?.model,
                None => sample_ising(&erdos_renyi(&gs)?, &ps)?,
            };
            let provenance = Provenance {
                gamma,
                sigma,
                seed,
                connected: model.graph().is_connected(),
            };
            emit(&out, &(ising_to_json(&model, Some(provenance)) + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SamplingExhausted { .. } => EXIT_EXHAUSTED,
                _ => EXIT_INPUT,
            })
        }
    }
}
