//! Finite MDP model, transitions and trajectories.
//!
//! Rewards are a deterministic function `r(s, a)`. Terminal states are
//! absorbing in the sense that an episode ends on entering one; their
//! transition rows are never read and may be left as all zeros.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of every transition row.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    // [s][a][s'] flattened
    transition: Vec<f64>,
    // [s][a] flattened
    reward: Vec<f64>,
    terminal: Vec<bool>,
    gamma: f64,
}

impl TabularMdp {
    /// Builds and validates a model. `transition[s][a]` is a distribution over
    /// next states, `reward[s][a]` the expected reward, `terminal` a list of
    /// state ids.
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        terminal: &[usize],
        gamma: f64,
    ) -> Result<Self> {
        let num_states = transition.len();
        if num_states == 0 {
            return Err(Error::invalid("num_states", "must be positive"));
        }
        let num_actions = transition[0].len();
        if num_actions == 0 {
            return Err(Error::invalid("num_actions", "must be positive"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{gamma} is outside [0, 1]"),
            ));
        }
        if reward.len() != num_states {
            return Err(Error::invalid(
                "reward",
                format!("expected {num_states} rows, got {}", reward.len()),
            ));
        }

        let mut is_terminal = vec![false; num_states];
        for &s in terminal {
            if s >= num_states {
                return Err(Error::invalid(
                    "terminal",
                    format!("state {s} out of range (num_states = {num_states})"),
                ));
            }
            is_terminal[s] = true;
        }
        if is_terminal.iter().all(|&t| t) {
            return Err(Error::invalid("terminal", "every state is terminal"));
        }

        let mut flat_p = Vec::with_capacity(num_states * num_actions * num_states);
        let mut flat_r = Vec::with_capacity(num_states * num_actions);
        for (s, (rows, rewards)) in transition.iter().zip(&reward).enumerate() {
            if rows.len() != num_actions || rewards.len() != num_actions {
                return Err(Error::invalid(
                    "transition",
                    format!("state {s} must have {num_actions} actions"),
                ));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != num_states {
                    return Err(Error::invalid(
                        "transition",
                        format!(
                            "row ({s}, {a}) has {} entries, expected {num_states}",
                            row.len()
                        ),
                    ));
                }
                if !rewards[a].is_finite() {
                    return Err(Error::invalid(
                        "reward",
                        format!("({s}, {a}) is not finite"),
                    ));
                }
                if is_terminal[s] {
                    // never read; only reject garbage
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return Err(Error::invalid(
                            "transition",
                            format!("row ({s}, {a}) of terminal state has invalid entries"),
                        ));
                    }
                } else {
                    check_distribution(row).map_err(|m| {
                        Error::invalid("transition", format!("row ({s}, {a}): {m}"))
                    })?;
                }
                flat_p.extend_from_slice(row);
            }
            flat_r.extend_from_slice(rewards);
        }

        Ok(TabularMdp {
            num_states,
            num_actions,
            transition: flat_p,
            reward: flat_r,
            terminal: is_terminal,
            gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Returns a copy with a different discount.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{gamma} is outside [0, 1]"),
            ));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> Vec<usize> {
        (0..self.num_states).filter(|&s| self.terminal[s]).collect()
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states).filter(|&s| !self.terminal[s])
    }

    /// Next-state distribution for `(s, a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::OutOfRange {
                what: "state",
                index: s,
                limit: self.num_states,
            });
        }
        Ok(())
    }

    pub(crate) fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.num_actions {
            return Err(Error::OutOfRange {
                what: "action",
                index: a,
                limit: self.num_actions,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> MdpJson {
        let transition = (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| self.transition_row(s, a).to_vec())
                    .collect()
            })
            .collect();
        let reward = (0..self.num_states)
            .map(|s| (0..self.num_actions).map(|a| self.reward(s, a)).collect())
            .collect();
        MdpJson {
            num_states: self.num_states,
            num_actions: self.num_actions,
            gamma: self.gamma,
            terminal: self.terminal_states(),
            reward,
            transition,
        }
    }

    pub fn from_json(json: MdpJson) -> Result<Self> {
        if json.transition.len() != json.num_states {
            return Err(Error::invalid(
                "transition",
                format!(
                    "{} state rows but num_states = {}",
                    json.transition.len(),
                    json.num_states
                ),
            ));
        }
        if json.transition.iter().any(|r| r.len() != json.num_actions) {
            return Err(Error::invalid(
                "transition",
                format!(
                    "every state must list num_actions = {} rows",
                    json.num_actions
                ),
            ));
        }
        TabularMdp::new(json.transition, json.reward, &json.terminal, json.gamma)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: MdpJson = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        Self::from_json(json)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json()).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Checks that `row` is a probability vector.
pub(crate) fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("entry {i} = {p} is not a probability"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

/// On-disk MDP format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpJson {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub terminal: Vec<usize>,
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
}

/// One step `(s_t, a_t, r_{t+1}, s_{t+1})` of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// True iff `next_state` is terminal.
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    transitions: Vec<Transition>,
    pub seed: u64,
    pub behaviour_id: String,
}

impl Trajectory {
    /// Validates time indices, state chaining and the position of `done`.
    pub fn new(
        transitions: Vec<Transition>,
        seed: u64,
        behaviour_id: impl Into<String>,
    ) -> Result<Self> {
        for (i, tr) in transitions.iter().enumerate() {
            if tr.t != i {
                return Err(Error::invalid(
                    "trajectory",
                    format!("transition {i} has time index {}", tr.t),
                ));
            }
            if i + 1 < transitions.len() {
                if tr.done {
                    return Err(Error::invalid(
                        "trajectory",
                        format!("transition {i} is done but not final"),
                    ));
                }
                if tr.next_state != transitions[i + 1].state {
                    return Err(Error::invalid(
                        "trajectory",
                        format!(
                            "next_state of step {i} does not match state of step {}",
                            i + 1
                        ),
                    ));
                }
            }
        }
        Ok(Trajectory {
            transitions,
            seed,
            behaviour_id: behaviour_id.into(),
        })
    }

    pub(crate) fn from_parts_unchecked(
        transitions: Vec<Transition>,
        seed: u64,
        behaviour_id: String,
    ) -> Self {
        Trajectory {
            transitions,
            seed,
            behaviour_id,
        }
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Episode length T.
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// True when the last transition entered a terminal state.
    pub fn terminated(&self) -> bool {
        self.transitions.last().is_some_and(|tr| tr.done)
    }

    /// Checks that every transition is consistent with `mdp`.
    pub fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        for tr in &self.transitions {
            mdp.check_state(tr.state)?;
            mdp.check_state(tr.next_state)?;
            mdp.check_action(tr.action)?;
            if mdp.is_terminal(tr.state) {
                return Err(Error::TerminalState(tr.state));
            }
            if tr.done != mdp.is_terminal(tr.next_state) {
                return Err(Error::invalid(
                    "trajectory",
                    format!("done flag at t = {} disagrees with the model", tr.t),
                ));
            }
        }
        Ok(())
    }
}
