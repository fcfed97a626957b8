//! Runs an experiment from a JSON config and writes the Q-table and the
//! learning curve, as `softq train` does.
//!
//! ```text
//! cargo run --example experiment [out_dir]
//! ```

use std::path::{Path, PathBuf};

use softq::harness::{emit_curve_csv, read_curve_csv, run_experiment, ExperimentConfig};

const CONFIG: &str = r#"{
    "env": {"kind": "gridworld",
            "params": {"width": 4, "height": 4, "goal": [3, 3], "step_reward": -1.0, "gamma": 0.95}},
    "algorithm": {"algorithm_id": "nstep_soft_q_is", "alpha": 0.2, "gamma": 0.95, "tau": 1.0, "n": 3},
    "behaviour": {"kind": "epsilon_boltzmann", "epsilon": 0.3},
    "default_policy": "uniform",
    "episodes": 300,
    "max_steps": 200,
    "seed": 42,
    "oracle": true
}"#;

pub fn run(out_dir: &Path) -> softq::Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| softq::Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;

    let cfg = ExperimentConfig::from_json_str(CONFIG)?;
    let (q, curve) = run_experiment(&cfg)?;
    let q_path = out_dir.join("q.json");
    let curve_path = out_dir.join("curve.csv");
    q.save(&q_path)?;
    emit_curve_csv(&curve, &curve_path)?;

    let back = read_curve_csv(&curve_path)?;
    assert_eq!(back, curve);
    for row in curve.iter().step_by(50) {
        println!(
            "episode {:>3}: {:>3} steps, return {:>8.3}, error {:.4}",
            row.episode,
            row.steps,
            row.ret,
            row.q_error_sup.unwrap_or(f64::NAN)
        );
    }
    println!("wrote {} and {}", q_path.display(), curve_path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("softq-experiment"));
    if let Err(e) = run(&out_dir) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
