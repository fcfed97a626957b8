//! Exact expectations of the importance-sampled 3-step update on the
//! two-state MDP, by enumerating every trajectory instead of sampling.
//!
//! ```text
//! cargo run --example importance_sampling
//! ```

use softq::algorithms::{nstep_is_update, AlgoConfig, AlgorithmId, Behaviour};
use softq::envs::build_two_state;
use softq::sampling::{enumerate_trajectories_from, DEFAULT_NODE_BUDGET};
use softq::tables::{PolicyTable, QTable};

pub fn run() -> softq::Result<()> {
    let mdp = build_two_state(0.9)?;
    let default = PolicyTable::uniform_for(&mdp);
    let q = QTable::from_fn(&mdp, |s, a| [[0.4, -1.2], [2.0, 0.7]][s][a])?;
    // α = 1 and frozen: the increment is the ρ-weighted TD-error sum itself
    let cfg = AlgoConfig::new(AlgorithmId::NstepSoftQIs, 1.0, 0.9, 0.8)?
        .with_n(3)?
        .frozen();

    let behaviours = [
        (
            "boltzmann",
            Behaviour::Boltzmann.to_table(&q, &default, cfg.tau),
        ),
        ("uniform", PolicyTable::uniform_for(&mdp)),
        (
            "eps-boltzmann 0.3",
            Behaviour::EpsilonBoltzmann(0.3).to_table(&q, &default, cfg.tau),
        ),
    ];

    for (s0, a0) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        print!("(s0, a0) = ({s0}, {a0}):");
        for (name, b) in &behaviours {
            let mut expectation = 0.0;
            let paths = enumerate_trajectories_from(&mdp, b, s0, Some(a0), 3, DEFAULT_NODE_BUDGET)?;
            for (traj, p) in &paths {
                let mut scratch = q.clone();
                let rec = nstep_is_update(&mut scratch, traj.transitions(), 0, &cfg, b, &default)?;
                expectation += p * rec.increment;
            }
            print!("  {name}: {expectation:+.15}");
        }
        println!();
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
