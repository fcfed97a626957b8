//! Soft Q(λ) with accumulating traces: one traced episode, the frozen-Q
//! forward/backward check, and training with on-policy and uniform
//! behaviour.
//!
//! ```text
//! cargo run --release --example soft_q_lambda
//! ```

use std::collections::BTreeMap;

use softq::algorithms::{
    lambda_return_forward, soft_q_lambda_episode, train, AlgoConfig, AlgorithmId, Behaviour,
    TrainOptions,
};
use softq::envs::build_chain;
use softq::sampling::SampleStream;
use softq::soft::soft_value_iteration;
use softq::tables::{PolicyTable, QTable};

pub fn run() -> softq::Result<()> {
    let mdp = build_chain(5, 0.95)?;
    let default = PolicyTable::uniform_for(&mdp);
    let cfg = AlgoConfig::new(AlgorithmId::SoftQLambda, 0.1, 0.95, 0.5)?.with_lambda(0.8)?;

    // frozen Q: summed trace increments equal the forward-view λ-return increments
    let q = QTable::from_fn(&mdp, |s, a| 0.1 * s as f64 - 0.2 * a as f64)?.with_terminals(&mdp)?;
    let mut scratch = q.clone();
    let frozen = cfg.frozen();
    let (traj, records) = soft_q_lambda_episode(
        &mut scratch,
        &mdp,
        &Behaviour::Uniform,
        0,
        &frozen,
        &default,
        1_000,
        &mut SampleStream::new(3),
    )?;
    let mut backward: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for r in &records {
        *backward
            .entry((r.target_state, r.target_action))
            .or_default() += r.increment;
    }
    let mut forward: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (t, tr) in traj.transitions().iter().enumerate() {
        let g = lambda_return_forward(&q, traj.transitions(), t, &frozen, &default, false)?;
        *forward.entry((tr.state, tr.action)).or_default() +=
            frozen.alpha * (g - q.get(tr.state, tr.action));
    }
    println!(
        "episode of {} steps, {} trace updates",
        traj.len(),
        records.len()
    );
    for (key, b) in &backward {
        println!(
            "  {key:?}: backward {b:+.12}  forward {:+.12}",
            forward[key]
        );
    }

    let star = soft_value_iteration(&mdp, &default, cfg.tau, 1e-12, 100_000)?.q;
    let opts = TrainOptions {
        episodes: 2_000,
        max_steps: 1_000,
        start: 0,
        seed: 9,
    };
    for (id, behaviour) in [
        (AlgorithmId::SoftQLambda, Behaviour::Boltzmann),
        (AlgorithmId::SoftQLambdaTreeBackup, Behaviour::Boltzmann),
        (AlgorithmId::SoftQLambdaTreeBackup, Behaviour::Uniform),
    ] {
        let cfg = AlgoConfig::new(id, 0.1, 0.95, 0.5)?.with_lambda(0.8)?;
        let (_, curve) = train(&mdp, &cfg, &behaviour, &default, &opts, Some(&star))?;
        let last = curve.last().and_then(|r| r.q_error_sup).unwrap_or(f64::NAN);
        println!(
            "{id} with {} behaviour: final sup error {last:.4}",
            behaviour.id()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
