use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{emit_curve_csv, run_experiment, ExperimentConfig};
use crate::error::{Error, Result};

/// One (config, seed) pair of a sweep.
#[derive(Debug, Clone)]
pub struct SweepJob {
    pub name: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub name: String,
    pub seed: u64,
    pub episodes: usize,
    pub final_return: Option<f64>,
    pub final_q_error_sup: Option<f64>,
    pub curve_path: PathBuf,
    pub q_path: PathBuf,
}

/// Runs every `*.json` config in `config_dir` with seeds `seed, seed + 1, …,
/// seed + seeds − 1` (where `seed` is the config's own), in parallel.
///
/// Each job writes `<stem>_seed<k>.csv` and `<stem>_seed<k>_q.json` into
/// `out_dir`; `summary.json` lists the jobs in (config name, seed) order.
pub fn run_sweep(config_dir: &Path, seeds: u64, out_dir: &Path) -> Result<Vec<SweepResult>> {
    if seeds == 0 {
        return Err(Error::invalid("seeds", "must be positive"));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(config_dir)
        .map_err(|e| Error::io(config_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(
            "config_dir",
            format!("no .json configs in {}", config_dir.display()),
        ));
    }

    let mut jobs = Vec::new();
    for path in &paths {
        let base = ExperimentConfig::load(path)?;
        base.prepare()?;
        let stem = path
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        for k in 0..seeds {
            let mut config = base.clone();
            config.seed = base.seed.wrapping_add(k);
            jobs.push(SweepJob {
                name: stem.clone(),
                config,
            });
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    // par_iter + collect keeps job order regardless of scheduling
    let results: Vec<SweepResult> = jobs
        .par_iter()
        .map(|job| run_job(job, out_dir))
        .collect::<Result<_>>()?;

    let summary = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&results).expect("summary serialises");
    std::fs::write(&summary, text).map_err(|e| Error::io(&summary, e))?;
    Ok(results)
}

fn run_job(job: &SweepJob, out_dir: &Path) -> Result<SweepResult> {
    let seed = job.config.seed;
    let (q, curve) = run_experiment(&job.config)?;
    let curve_path = out_dir.join(format!("{}_seed{seed}.csv", job.name));
    let q_path = out_dir.join(format!("{}_seed{seed}_q.json", job.name));
    emit_curve_csv(&curve, &curve_path)?;
    q.save(&q_path)?;
    Ok(SweepResult {
        name: job.name.clone(),
        seed,
        episodes: curve.len(),
        final_return: curve.last().map(|r| r.ret),
        final_q_error_sup: curve.last().and_then(|r| r.q_error_sup),
        curve_path,
        q_path,
    })
}
