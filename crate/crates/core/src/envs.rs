//! Benchmark MDPs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

/// Grid of `height` rows by `width` columns. Cell `(row, col)` is state
/// `row * width + col`. Moves are deterministic and clamped at the walls;
/// every transition pays `step_reward`, including the one into the goal.
pub fn build_gridworld(
    width: usize,
    height: usize,
    goal: (usize, usize),
    step_reward: f64,
    gamma: f64,
) -> Result<TabularMdp> {
    if width == 0 || height == 0 || width * height < 2 {
        return Err(Error::invalid(
            "gridworld",
            format!("{height}x{width} grid is too small"),
        ));
    }
    if goal.0 >= height || goal.1 >= width {
        return Err(Error::invalid(
            "goal",
            format!(
                "({}, {}) is outside a {height}x{width} grid",
                goal.0, goal.1
            ),
        ));
    }
    let n = width * height;
    let goal_state = goal.0 * width + goal.1;
    let mut transition = vec![vec![vec![0.0; n]; 4]; n];
    let mut reward = vec![vec![0.0; 4]; n];
    for row in 0..height {
        for col in 0..width {
            let s = row * width + col;
            if s == goal_state {
                continue;
            }
            for a in [UP, DOWN, LEFT, RIGHT] {
                let (r, c) = match a {
                    UP => (row.saturating_sub(1), col),
                    DOWN => ((row + 1).min(height - 1), col),
                    LEFT => (row, col.saturating_sub(1)),
                    _ => (row, (col + 1).min(width - 1)),
                };
                transition[s][a][r * width + c] = 1.0;
                reward[s][a] = step_reward;
            }
        }
    }
    TabularMdp::new(transition, reward, &[goal_state], gamma)
}

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;

/// States `0..length`, actions left/right, rightmost state terminal.
/// Entering it pays +1; every other step pays 0. Moving left from 0 stays.
pub fn build_chain(length: usize, gamma: f64) -> Result<TabularMdp> {
    if length < 2 {
        return Err(Error::invalid(
            "length",
            format!("{length} must be at least 2"),
        ));
    }
    let last = length - 1;
    let mut transition = vec![vec![vec![0.0; length]; 2]; length];
    let mut reward = vec![vec![0.0; 2]; length];
    for s in 0..last {
        transition[s][CHAIN_LEFT][s.saturating_sub(1)] = 1.0;
        transition[s][CHAIN_RIGHT][s + 1] = 1.0;
        if s + 1 == last {
            reward[s][CHAIN_RIGHT] = 1.0;
        }
    }
    TabularMdp::new(transition, reward, &[last], gamma)
}

/// Transition rows of the two-state MDP, `[state][action][next]` with
/// state 2 terminal.
pub const TWO_STATE_TRANSITIONS: [[[f64; 3]; 2]; 2] = [
    [[0.0, 0.7, 0.3], [0.1, 0.1, 0.8]],
    [[0.2, 0.0, 0.8], [0.05, 0.15, 0.8]],
];

/// Rewards of the two-state MDP, `[state][action]`.
pub const TWO_STATE_REWARDS: [[f64; 2]; 2] = [[1.0, -0.5], [0.3, 2.0]];

/// Two non-terminal states, one terminal state (2) and two actions, with
/// stochastic transitions and distinct rewards. Under a uniform behaviour
/// about 3.4% of the mass from state 0 survives three steps.
pub fn build_two_state(gamma: f64) -> Result<TabularMdp> {
    let mut transition: Vec<Vec<Vec<f64>>> = TWO_STATE_TRANSITIONS
        .iter()
        .map(|rows| rows.iter().map(|r| r.to_vec()).collect())
        .collect();
    transition.push(vec![vec![0.0; 3]; 2]);
    let mut reward: Vec<Vec<f64>> = TWO_STATE_REWARDS.iter().map(|r| r.to_vec()).collect();
    reward.push(vec![0.0; 2]);
    TabularMdp::new(transition, reward, &[2], gamma)
}

/// Random MDP: each `(s, a)` row spreads normalised uniform weights over
/// `branching` distinct successors; rewards are uniform in `reward_range`;
/// one state, chosen at random, is terminal.
pub fn build_random_mdp(
    num_states: usize,
    num_actions: usize,
    branching: usize,
    reward_range: (f64, f64),
    gamma: f64,
    seed: u64,
) -> Result<TabularMdp> {
    if num_states < 2 {
        return Err(Error::invalid("num_states", "need at least 2 states"));
    }
    if num_actions == 0 {
        return Err(Error::invalid("num_actions", "must be positive"));
    }
    if branching == 0 || branching > num_states {
        return Err(Error::invalid(
            "branching",
            format!("{branching} must be in 1..={num_states}"),
        ));
    }
    let (lo, hi) = reward_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::invalid(
            "reward_range",
            format!("[{lo}, {hi}] is not a valid range"),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terminal = rng.gen_range(0..num_states);
    let mut transition = vec![vec![vec![0.0; num_states]; num_actions]; num_states];
    let mut reward = vec![vec![0.0; num_actions]; num_states];
    for s in 0..num_states {
        if s == terminal {
            continue;
        }
        for a in 0..num_actions {
            let successors = sample(&mut rng, num_states, branching);
            // (0, 1] keeps every chosen successor reachable
            let weights: Vec<f64> = (0..branching).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            let row = &mut transition[s][a];
            for (next, w) in successors.iter().zip(&weights) {
                row[next] = w / total;
            }
            renormalise(row);
            reward[s][a] = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        }
    }
    TabularMdp::new(transition, reward, &[terminal], gamma)
}

// Pushes the rounding residue onto the largest entry so the row sums to 1.
fn renormalise(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    if let Some(max) = row.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *max += 1.0 - total;
    }
}

/// Environment description used in experiment configs:
/// `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum EnvSpec {
    Gridworld(GridworldParams),
    Chain(ChainParams),
    TwoState(TwoStateParams),
    Random(RandomParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridworldParams {
    pub width: usize,
    pub height: usize,
    /// `[row, col]`
    pub goal: (usize, usize),
    pub step_reward: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub length: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStateParams {
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub branching: usize,
    pub reward_range: (f64, f64),
    pub gamma: f64,
    pub seed: u64,
}

impl EnvSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            EnvSpec::Gridworld(p) => {
                build_gridworld(p.width, p.height, p.goal, p.step_reward, p.gamma)
            }
            EnvSpec::Chain(p) => build_chain(p.length, p.gamma),
            EnvSpec::TwoState(p) => build_two_state(p.gamma),
            EnvSpec::Random(p) => build_random_mdp(
                p.num_states,
                p.num_actions,
                p.branching,
                p.reward_range,
                p.gamma,
                p.seed,
            ),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            EnvSpec::Gridworld(p) => p.gamma,
            EnvSpec::Chain(p) => p.gamma,
            EnvSpec::TwoState(p) => p.gamma,
            EnvSpec::Random(p) => p.gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soft::{soft_value_iteration, DEFAULT_VI_TOL};
    use crate::tables::{PolicyTable, Temperature};

    #[test]
    fn tiny_gridworld() {
        let mdp = build_gridworld(2, 1, (0, 1), -1.0, 0.9).unwrap();
        assert_eq!(mdp.num_states(), 2);
        assert_eq!(mdp.transition_row(0, RIGHT), &[0.0, 1.0]);
        assert!(mdp.is_terminal(1));
        // walls clamp
        assert_eq!(mdp.transition_row(0, LEFT), &[1.0, 0.0]);
        assert_eq!(mdp.transition_row(0, UP), &[1.0, 0.0]);
        assert_eq!(mdp.reward(0, LEFT), -1.0);
    }

    #[test]
    fn gridworld_validation() {
        assert!(build_gridworld(5, 5, (5, 0), -1.0, 0.9).is_err());
        assert!(build_gridworld(1, 1, (0, 0), -1.0, 0.9).is_err());
    }

    #[test]
    fn gridworld_5x5_solves() {
        let mdp = build_gridworld(5, 5, (4, 4), -1.0, 0.95).unwrap();
        assert_eq!(mdp.num_states(), 25);
        let d = PolicyTable::uniform_for(&mdp);
        let sol = soft_value_iteration(
            &mdp,
            &d,
            Temperature::new(1.0).unwrap(),
            DEFAULT_VI_TOL,
            10_000,
        )
        .unwrap();
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn chain_shape() {
        let mdp = build_chain(2, 0.9).unwrap();
        assert_eq!(mdp.transition_row(0, CHAIN_RIGHT), &[0.0, 1.0]);
        assert_eq!(mdp.reward(0, CHAIN_RIGHT), 1.0);
        assert!(mdp.is_terminal(1));
        assert!(build_chain(1, 0.9).is_err());
    }

    #[test]
    fn chain_prefers_right() {
        let mdp = build_chain(5, 0.95).unwrap();
        let d = PolicyTable::uniform_for(&mdp);
        let q = soft_value_iteration(&mdp, &d, Temperature::new(0.5).unwrap(), 1e-12, 100_000)
            .unwrap()
            .q;
        for s in 0..4 {
            assert!(q.get(s, CHAIN_RIGHT) > q.get(s, CHAIN_LEFT), "state {s}");
        }
        // entering the terminal state ends the episode, so no bootstrap
        assert!((q.get(3, CHAIN_RIGHT) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_rows() {
        let mdp = build_two_state(0.9).unwrap();
        assert_eq!(mdp.num_states(), 3);
        assert_eq!(mdp.num_actions(), 2);
        assert_eq!(mdp.transition_row(0, 0), &[0.0, 0.7, 0.3]);
        assert_eq!(mdp.terminal_states(), vec![2]);
    }

    #[test]
    fn random_mdp_deterministic_and_normalised() {
        let a = build_random_mdp(6, 3, 3, (-1.0, 1.0), 0.9, 42).unwrap();
        let b = build_random_mdp(6, 3, 3, (-1.0, 1.0), 0.9, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_random_mdp(6, 3, 3, (-1.0, 1.0), 0.9, 43).unwrap());
        assert_eq!(a.terminal_states().len(), 1);
        for s in a.non_terminal_states() {
            for act in 0..3 {
                let row = a.transition_row(s, act);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 3);
            }
        }
        assert!(build_random_mdp(3, 2, 4, (0.0, 1.0), 0.9, 1).is_err());
        assert!(build_random_mdp(3, 2, 2, (1.0, 0.0), 0.9, 1).is_err());
    }

    #[test]
    fn random_mdp_solves_quickly() {
        let mdp = build_random_mdp(6, 3, 3, (-1.0, 1.0), 0.9, 42).unwrap();
        let d = PolicyTable::uniform_for(&mdp);
        let sol =
            soft_value_iteration(&mdp, &d, Temperature::new(1.0).unwrap(), 1e-10, 100_000).unwrap();
        assert!(sol.iterations < 100_000);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn env_spec_json() {
        let spec: EnvSpec = serde_json::from_str(
            r#"{"kind":"gridworld","params":{"width":5,"height":5,"goal":[4,4],"step_reward":-1,"gamma":0.95}}"#,
        )
        .unwrap();
        assert_eq!(spec.build().unwrap().num_states(), 25);
        assert!(
            serde_json::from_str::<EnvSpec>(r#"{"kind":"chain","params":{"length":5}}"#).is_err()
        );
        assert!(serde_json::from_str::<EnvSpec>(
            r#"{"kind":"chain","params":{"length":5,"gamma":0.9,"x":1}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<EnvSpec>(r#"{"kind":"maze","params":{}}"#).is_err());
    }
}
