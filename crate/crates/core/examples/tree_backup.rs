//! n-step Tree Backup on the 5-state chain under a uniform behaviour policy,
//! for several n, plus the frozen-Q return forms on one episode.
//!
//! ```text
//! cargo run --release --example tree_backup
//! ```

use softq::algorithms::{
    train, treebackup_return_direct, treebackup_return_explicit, treebackup_return_tdform,
    AlgoConfig, AlgorithmId, Behaviour, TrainOptions,
};
use softq::envs::build_chain;
use softq::sampling::{rollout_episode, SampleStream};
use softq::soft::soft_value_iteration;
use softq::tables::{PolicyTable, Temperature};

pub fn run() -> softq::Result<()> {
    let mdp = build_chain(5, 0.95)?;
    let default = PolicyTable::uniform_for(&mdp);
    let star = soft_value_iteration(&mdp, &default, Temperature::new(0.5)?, 1e-12, 100_000)?.q;
    let opts = TrainOptions {
        episodes: 2_000,
        max_steps: 1_000,
        start: 0,
        seed: 1,
    };

    for n in [1, 2, 3, 5] {
        let cfg = AlgoConfig::new(AlgorithmId::NstepTreeBackup, 0.1, 0.95, 0.5)?.with_n(n)?;
        let (_, curve) = train(
            &mdp,
            &cfg,
            &Behaviour::Uniform,
            &default,
            &opts,
            Some(&star),
        )?;
        let err = |i: usize| curve[i].q_error_sup.unwrap_or(f64::NAN);
        println!(
            "n = {n}: sup error after 100 / 500 / 2000 episodes: {:.4} {:.4} {:.4}",
            err(99),
            err(499),
            err(1999)
        );
    }

    // the three ways of writing the same window, on Q*
    let cfg = AlgoConfig::new(AlgorithmId::NstepTreeBackup, 0.1, 0.95, 0.5)?.with_n(3)?;
    let ep = rollout_episode(&mdp, &default, 0, 1_000, &mut SampleStream::new(4))?;
    let steps = ep.transitions();
    let t = steps.len().saturating_sub(3);
    println!("\nepisode of {} steps, window from t = {t}:", steps.len());
    println!(
        "  recursive form  {:.12}",
        treebackup_return_direct(&star, steps, t, &cfg, &default)?
    );
    println!(
        "  explicit form   {:.12}",
        treebackup_return_explicit(&star, steps, t, &cfg, &default)?
    );
    println!(
        "  TD-error form   {:.12}",
        treebackup_return_tdform(&star, steps, t, &cfg, &default)?
    );
    let (s, a) = (steps[t].state, steps[t].action);
    println!("  Q*(s_t, a_t)    {:.12}", star.get(s, a));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
