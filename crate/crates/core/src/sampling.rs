//! Seeded sampling, episode rollout and exhaustive trajectory enumeration.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Trajectory, Transition};
use crate::tables::PolicyTable;

/// Default node budget for [`enumerate_trajectories`].
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Deterministic random stream backed by ChaCha8.
///
/// Each episode index selects an independent ChaCha stream of the same
/// seed, so runs that split episodes across threads draw the same numbers
/// as a serial run.
#[derive(Debug, Clone)]
pub struct SampleStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        SampleStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sub-stream for one episode of a run seeded with `seed`.
    pub fn for_episode(seed: u64, episode: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(episode);
        SampleStream { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from the distribution `probs`. Zero-probability entries
    /// are never returned.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

/// Draws `s'` from `p(·|s, a)`. The returned transition has `t = 0`.
pub fn sample_transition(
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    rng: &mut SampleStream,
) -> Result<Transition> {
    mdp.check_state(s)?;
    mdp.check_action(a)?;
    if mdp.is_terminal(s) {
        return Err(Error::TerminalState(s));
    }
    let next_state = rng.categorical(mdp.transition_row(s, a));
    Ok(Transition {
        t: 0,
        state: s,
        action: a,
        reward: mdp.reward(s, a),
        next_state,
        done: mdp.is_terminal(next_state),
    })
}

/// Runs `behaviour` from `start` until a terminal state or `max_steps`.
pub fn rollout_episode(
    mdp: &TabularMdp,
    behaviour: &PolicyTable,
    start: usize,
    max_steps: usize,
    rng: &mut SampleStream,
) -> Result<Trajectory> {
    behaviour.check_shape(mdp)?;
    mdp.check_state(start)?;
    if mdp.is_terminal(start) {
        return Err(Error::TerminalState(start));
    }
    if max_steps == 0 {
        return Err(Error::invalid("max_steps", "must be positive"));
    }
    let mut transitions = Vec::new();
    let mut s = start;
    for t in 0..max_steps {
        let a = rng.categorical(behaviour.row(s));
        let mut tr = sample_transition(mdp, s, a, rng)?;
        tr.t = t;
        transitions.push(tr);
        if tr.done {
            break;
        }
        s = tr.next_state;
    }
    Ok(Trajectory::from_parts_unchecked(
        transitions,
        rng.seed(),
        "table".to_string(),
    ))
}

/// Every trajectory of at most `horizon` steps from `start` under
/// `behaviour`, with its exact probability. Leaves are terminal transitions
/// or prefixes cut at the horizon.
pub fn enumerate_trajectories(
    mdp: &TabularMdp,
    behaviour: &PolicyTable,
    start: usize,
    horizon: usize,
) -> Result<Vec<(Trajectory, f64)>> {
    enumerate_trajectories_from(mdp, behaviour, start, None, horizon, DEFAULT_NODE_BUDGET)
}

/// Like [`enumerate_trajectories`], optionally forcing the first action
/// (the returned probabilities are then conditional on it) and with an
/// explicit node budget.
pub fn enumerate_trajectories_from(
    mdp: &TabularMdp,
    behaviour: &PolicyTable,
    start: usize,
    first_action: Option<usize>,
    horizon: usize,
    budget: usize,
) -> Result<Vec<(Trajectory, f64)>> {
    behaviour.check_shape(mdp)?;
    mdp.check_state(start)?;
    if mdp.is_terminal(start) {
        return Err(Error::TerminalState(start));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if let Some(a) = first_action {
        mdp.check_action(a)?;
    }

    let mut walker = Enumerator {
        mdp,
        behaviour,
        first_action,
        horizon,
        budget,
        nodes: 0,
        prefix: Vec::with_capacity(horizon),
        out: Vec::new(),
    };
    walker.expand(start, 1.0)?;
    Ok(walker.out)
}

struct Enumerator<'a> {
    mdp: &'a TabularMdp,
    behaviour: &'a PolicyTable,
    first_action: Option<usize>,
    horizon: usize,
    budget: usize,
    nodes: usize,
    prefix: Vec<Transition>,
    out: Vec<(Trajectory, f64)>,
}

impl Enumerator<'_> {
    fn expand(&mut self, s: usize, prob: f64) -> Result<()> {
        let t = self.prefix.len();
        for a in 0..self.mdp.num_actions() {
            let pa = match self.first_action {
                Some(forced) if t == 0 => {
                    if a == forced {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => self.behaviour.prob(s, a),
            };
            if pa <= 0.0 {
                continue;
            }
            for (next_state, &ps) in self.mdp.transition_row(s, a).iter().enumerate() {
                if ps <= 0.0 {
                    continue;
                }
                self.nodes += 1;
                if self.nodes > self.budget {
                    return Err(Error::BudgetExceeded {
                        budget: self.budget,
                    });
                }
                let done = self.mdp.is_terminal(next_state);
                self.prefix.push(Transition {
                    t,
                    state: s,
                    action: a,
                    reward: self.mdp.reward(s, a),
                    next_state,
                    done,
                });
                let p = prob * pa * ps;
                if done || t + 1 == self.horizon {
                    let traj = Trajectory::from_parts_unchecked(
                        self.prefix.clone(),
                        0,
                        "enumeration".into(),
                    );
                    self.out.push((traj, p));
                } else {
                    self.expand(next_state, p)?;
                }
                self.prefix.pop();
            }
        }
        Ok(())
    }
}
