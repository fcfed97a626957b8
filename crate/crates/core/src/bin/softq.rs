use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use softq::envs::EnvSpec;
use softq::harness::{
    emit_curve_csv, run_experiment, run_sweep, run_verification_suite, ExperimentConfig, Suite,
};
use softq::mdp::{MdpJson, TabularMdp};
use softq::soft::{soft_value_iteration, DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOL};
use softq::tables::{PolicyTable, Temperature};
use softq::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "softq", version, about = "Tabular soft Q-learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an MDP by soft value iteration and write Q*.
    Solve {
        /// MDP JSON or environment spec JSON: a file path or inline text.
        #[arg(long)]
        env: String,
        #[arg(long)]
        tau: f64,
        /// Overrides the discount stored with the environment.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_VI_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_VI_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_q: PathBuf,
        #[arg(long)]
        out_curve: PathBuf,
    },
    /// Run a verification suite and print its JSON report.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every config in a directory over several seeds.
    Sweep {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_VALIDATION })
        }
    }
}

fn run(command: Command) -> softq::Result<ExitCode> {
    match command {
        Command::Solve {
            env,
            tau,
            gamma,
            tol,
            max_iters,
            out,
        } => {
            let mut mdp = load_env(&env)?;
            if let Some(g) = gamma {
                mdp = mdp.with_gamma(g)?;
            }
            let default = PolicyTable::uniform_for(&mdp);
            let vi = soft_value_iteration(&mdp, &default, Temperature::new(tau)?, tol, max_iters)?;
            vi.q.save(&out)?;
            eprintln!(
                "converged in {} iterations, residual {:e}",
                vi.iterations, vi.residual
            );
        }
        Command::Train {
            config,
            out_q,
            out_curve,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (q, curve) = run_experiment(&cfg)?;
            q.save(&out_q)?;
            emit_curve_csv(&curve, &out_curve)?;
            if let Some(last) = curve.last() {
                eprintln!("{} episodes, last return {}", curve.len(), last.ret);
            }
        }
        Command::Verify { suite, seed } => {
            let suite: Suite = suite.parse()?;
            let report = run_verification_suite(suite, seed)?;
            println!("{}", report.to_json_string());
            if !report.passed {
                return Ok(ExitCode::from(EXIT_VERIFICATION));
            }
        }
        Command::Sweep {
            config_dir,
            seeds,
            out_dir,
        } => {
            let results = run_sweep(&config_dir, seeds, &out_dir)?;
            eprintln!("{} runs written to {}", results.len(), out_dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Accepts a path or inline JSON, holding either a full MDP or an
/// environment spec.
fn load_env(arg: &str) -> softq::Result<TabularMdp> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
    } else {
        arg.to_string()
    };
    if let Ok(spec) = serde_json::from_str::<EnvSpec>(&text) {
        return spec.build();
    }
    let json: MdpJson = serde_json::from_str(&text).map_err(|source| Error::Json {
        context: format!("--env {arg}"),
        source,
    })?;
    TabularMdp::from_json(json)
}
