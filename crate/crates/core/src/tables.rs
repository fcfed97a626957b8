//! Dense tables over states and actions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{check_distribution, TabularMdp};

/// Smallest accepted temperature.
pub const MIN_TAU: f64 = 1e-8;

/// Strictly positive temperature τ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < MIN_TAU {
            return Err(Error::invalid(
                "tau",
                format!("{tau} must be finite and at least {MIN_TAU:e}"),
            ));
        }
        Ok(Temperature(tau))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Temperature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tau = f64::deserialize(d)?;
        Temperature::new(tau).map_err(serde::de::Error::custom)
    }
}

/// Soft action values `Q(s, a)`.
///
/// Rows of terminal states are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
    terminal: Vec<bool>,
}

impl QTable {
    pub fn zeros(mdp: &TabularMdp) -> Self {
        QTable {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            values: vec![0.0; mdp.num_states() * mdp.num_actions()],
            terminal: (0..mdp.num_states()).map(|s| mdp.is_terminal(s)).collect(),
        }
    }

    /// Fills non-terminal entries from `f(s, a)`.
    pub fn from_fn(mdp: &TabularMdp, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut q = QTable::zeros(mdp);
        for s in mdp.non_terminal_states() {
            for a in 0..mdp.num_actions() {
                q.set(s, a, f(s, a))?;
            }
        }
        Ok(q)
    }

    /// Builds a table from rows with no knowledge of terminal states.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("q", "table must be non-empty"));
        }
        let mut values = Vec::with_capacity(num_states * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::invalid(
                    "q",
                    format!("row {s} has {} entries", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid("q", format!("row {s} contains {v}")));
            }
            values.extend_from_slice(row);
        }
        Ok(QTable {
            num_states,
            num_actions,
            values,
            terminal: vec![false; num_states],
        })
    }

    /// Attaches the terminal set of `mdp`; terminal rows must already be zero.
    pub fn with_terminals(mut self, mdp: &TabularMdp) -> Result<Self> {
        self.check_shape(mdp)?;
        for s in mdp.terminal_states() {
            if self.row(s).iter().any(|&v| v != 0.0) {
                return Err(Error::invalid(
                    "q",
                    format!("terminal state {s} has a non-zero row"),
                ));
            }
            self.terminal[s] = true;
        }
        Ok(self)
    }

    pub fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_states != mdp.num_states() || self.num_actions != mdp.num_actions() {
            return Err(Error::invalid(
                "q",
                format!(
                    "shape {}x{} does not match the MDP ({}x{})",
                    self.num_states,
                    self.num_actions,
                    mdp.num_states(),
                    mdp.num_actions()
                ),
            ));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) -> Result<()> {
        if s >= self.num_states || a >= self.num_actions {
            return Err(Error::OutOfRange {
                what: "q index",
                index: s * self.num_actions + a,
                limit: self.values.len(),
            });
        }
        if self.terminal[s] {
            return Err(Error::TerminalState(s));
        }
        if !v.is_finite() {
            return Err(Error::invalid(
                "q",
                format!("({s}, {a}) = {v} is not finite"),
            ));
        }
        self.values[s * self.num_actions + a] = v;
        Ok(())
    }

    /// `Q(s, a) += dv`. Callers guarantee `s` is non-terminal.
    pub(crate) fn add(&mut self, s: usize, a: usize, dv: f64) {
        debug_assert!(!self.terminal[s]);
        self.values[s * self.num_actions + a] += dv;
    }

    /// Shifts every non-terminal entry of state `s` by `c`.
    pub fn shift_row(&mut self, s: usize, c: f64) {
        if self.terminal[s] {
            return;
        }
        for v in &mut self.values[s * self.num_actions..(s + 1) * self.num_actions] {
            *v += c;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sup-norm distance over non-terminal entries.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.num_states {
            if self.terminal[s] {
                continue;
            }
            for (a, b) in self.row(s).iter().zip(other.row(s)) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> QTableJson {
        QTableJson {
            num_states: self.num_states,
            num_actions: self.num_actions,
            q: self
                .values
                .chunks(self.num_actions)
                .map(<[f64]>::to_vec)
                .collect(),
        }
    }

    pub fn from_json(json: &QTableJson) -> Result<Self> {
        if json.q.len() != json.num_states || json.q.iter().any(|r| r.len() != json.num_actions) {
            return Err(Error::invalid(
                "q",
                format!("expected a {}x{} array", json.num_states, json.num_actions),
            ));
        }
        QTable::from_rows(&json.q)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json()).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: QTableJson = serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        QTable::from_json(&json)
    }
}

/// On-disk Q-table format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTableJson {
    pub num_states: usize,
    pub num_actions: usize,
    pub q: Vec<Vec<f64>>,
}

/// Per-state distribution over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("policy", "table must be non-empty"));
        }
        let mut probs = Vec::with_capacity(num_states * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::invalid(
                    "policy",
                    format!("row {s} has {} entries", row.len()),
                ));
            }
            check_distribution(row)
                .map_err(|m| Error::invalid("policy", format!("row {s}: {m}")))?;
            probs.extend_from_slice(row);
        }
        Ok(PolicyTable {
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        PolicyTable {
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// Uniform over the actions of `mdp`.
    pub fn uniform_for(mdp: &TabularMdp) -> Self {
        Self::uniform(mdp.num_states(), mdp.num_actions())
    }

    pub fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_states != mdp.num_states() || self.num_actions != mdp.num_actions() {
            return Err(Error::invalid(
                "policy",
                format!(
                    "shape {}x{} does not match the MDP ({}x{})",
                    self.num_states,
                    self.num_actions,
                    mdp.num_states(),
                    mdp.num_actions()
                ),
            ));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs
            .chunks(self.num_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }
}
