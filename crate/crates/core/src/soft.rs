//! Entropy-regularised value computations.
//!
//! With temperature τ and default policy π^d:
//!
//! * soft state value `V_Q(s) = τ log Σ_a π^d(a|s) exp(Q(s,a)/τ)`,
//! * Boltzmann policy `π^B(a|s) ∝ π^d(a|s) exp(Q(s,a)/τ)`,
//! * `KL(s)`, the divergence of π^B from π^d at `s`.
//!
//! Every log-sum-exp is shifted by the largest Q-value over the support of
//! π^d; actions outside that support are dropped. Terminal states have
//! `V_Q = 0` and `KL = 0`.

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};
use crate::tables::{PolicyTable, QTable, Temperature};

/// KL values in `[-KL_ROUNDING, 0)` are treated as rounding and clamped.
pub const KL_ROUNDING: f64 = 1e-12;

/// Soft maximum of one Q row under the default row.
pub fn soft_value_row(q_row: &[f64], default_row: &[f64], tau: Temperature) -> f64 {
    let tau = tau.get();
    let shift = support_max(q_row, default_row);
    let mut sum = 0.0;
    for (&q, &p) in q_row.iter().zip(default_row) {
        if p > 0.0 {
            sum += p * ((q - shift) / tau).exp();
        }
    }
    shift + tau * sum.ln()
}

/// Boltzmann distribution for one Q row, written into `out`.
pub fn boltzmann_row_into(
    q_row: &[f64],
    default_row: &[f64],
    tau: Temperature,
    out: &mut Vec<f64>,
) {
    let tau = tau.get();
    let shift = support_max(q_row, default_row);
    out.clear();
    let mut z = 0.0;
    for (&q, &p) in q_row.iter().zip(default_row) {
        let w = if p > 0.0 {
            p * ((q - shift) / tau).exp()
        } else {
            0.0
        };
        z += w;
        out.push(w);
    }
    for w in out.iter_mut() {
        *w /= z;
    }
}

fn support_max(q_row: &[f64], default_row: &[f64]) -> f64 {
    q_row
        .iter()
        .zip(default_row)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&q, _)| q)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `V_Q(s)`; zero for terminal `s`.
pub fn soft_state_value(
    q: &QTable,
    s: usize,
    default_policy: &PolicyTable,
    tau: Temperature,
) -> f64 {
    if q.is_terminal(s) {
        return 0.0;
    }
    soft_value_row(q.row(s), default_policy.row(s), tau)
}

/// `π^B_Q(·|s)`.
pub fn boltzmann_policy(
    q: &QTable,
    s: usize,
    default_policy: &PolicyTable,
    tau: Temperature,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.num_actions());
    boltzmann_row_into(q.row(s), default_policy.row(s), tau, &mut out);
    out
}

/// `Σ_a π(a) log(π(a)/π^d(a))` with `0 log 0 = 0`.
///
/// Fails if `pi` puts mass where `default_row` has none, or if the sum is
/// more negative than rounding can explain.
pub fn kl_penalty(pi: &[f64], default_row: &[f64]) -> Result<f64> {
    let mut kl = 0.0;
    for (a, (&p, &d)) in pi.iter().zip(default_row).enumerate() {
        if p > 0.0 {
            if d <= 0.0 {
                return Err(Error::NotAbsolutelyContinuous { action: a, mass: p });
            }
            kl += p * (p / d).ln();
        }
    }
    if kl < 0.0 {
        if kl >= -KL_ROUNDING {
            return Ok(0.0);
        }
        return Err(Error::NegativeKl(kl));
    }
    Ok(kl)
}

/// `KL(π^B_Q(·|s) ‖ π^d(·|s))`; zero for terminal `s`.
pub fn boltzmann_kl(q: &QTable, s: usize, default_policy: &PolicyTable, tau: Temperature) -> f64 {
    if q.is_terminal(s) {
        return 0.0;
    }
    let pi = boltzmann_policy(q, s, default_policy, tau);
    // π^B is supported inside π^d and sums to one, so only rounding can go negative.
    kl_penalty(&pi, default_policy.row(s)).unwrap_or(0.0)
}

/// One-step soft Q-learning error `r + γ V_Q(s') − Q(s, a)`.
pub fn td_error_first(
    q: &QTable,
    tr: &Transition,
    default_policy: &PolicyTable,
    tau: Temperature,
    gamma: f64,
) -> f64 {
    let bootstrap = if tr.done {
        0.0
    } else {
        soft_state_value(q, tr.next_state, default_policy, tau)
    };
    tr.reward + gamma * bootstrap - q.get(tr.state, tr.action)
}

/// KL-penalised error `r − τ KL(s) + γ V_Q(s') − V_Q(s)`.
pub fn td_error_subsequent(
    q: &QTable,
    tr: &Transition,
    default_policy: &PolicyTable,
    tau: Temperature,
    gamma: f64,
) -> f64 {
    let bootstrap = if tr.done {
        0.0
    } else {
        soft_state_value(q, tr.next_state, default_policy, tau)
    };
    tr.reward - tau.get() * boltzmann_kl(q, tr.state, default_policy, tau) + gamma * bootstrap
        - soft_state_value(q, tr.state, default_policy, tau)
}

/// Default stopping tolerance for [`soft_value_iteration`].
pub const DEFAULT_VI_TOL: f64 = 1e-10;
/// Default iteration cap for [`soft_value_iteration`].
pub const DEFAULT_VI_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ValueIterationResult {
    pub q: QTable,
    pub iterations: usize,
    /// Sup-norm of the last Bellman residual `‖TQ − Q‖`.
    pub residual: f64,
}

/// Applies `Q(s,a) ← r(s,a) + γ Σ_{s'} p(s'|s,a) V_Q(s')` once.
pub fn soft_bellman_operator(
    mdp: &TabularMdp,
    q: &QTable,
    default_policy: &PolicyTable,
    tau: Temperature,
) -> QTable {
    let values: Vec<f64> = (0..mdp.num_states())
        .map(|s| soft_state_value(q, s, default_policy, tau))
        .collect();
    let mut next = q.clone();
    for s in mdp.non_terminal_states() {
        for a in 0..mdp.num_actions() {
            let expected_v: f64 = mdp
                .transition_row(s, a)
                .iter()
                .zip(&values)
                .map(|(p, v)| p * v)
                .sum();
            let updated = mdp.reward(s, a) + mdp.gamma() * expected_v;
            next.add(s, a, updated - q.get(s, a));
        }
    }
    next
}

/// Soft value iteration from `Q ≡ 0`.
pub fn soft_value_iteration(
    mdp: &TabularMdp,
    default_policy: &PolicyTable,
    tau: Temperature,
    tol: f64,
    max_iters: usize,
) -> Result<ValueIterationResult> {
    soft_value_iteration_from(mdp, QTable::zeros(mdp), default_policy, tau, tol, max_iters)
}

/// Soft value iteration from a given table. Stops once `‖TQ − Q‖ < tol`
/// and returns `TQ`.
pub fn soft_value_iteration_from(
    mdp: &TabularMdp,
    init: QTable,
    default_policy: &PolicyTable,
    tau: Temperature,
    tol: f64,
    max_iters: usize,
) -> Result<ValueIterationResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", format!("{tol} must be positive")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters", "must be positive"));
    }
    init.check_shape(mdp)?;
    default_policy.check_shape(mdp)?;
    let mut q = init.with_terminals_zeroed(mdp);
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iters {
        let next = soft_bellman_operator(mdp, &q, default_policy, tau);
        residual = next.sup_distance(&q);
        q = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok(ValueIterationResult {
                q,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual,
    })
}

impl QTable {
    fn with_terminals_zeroed(self, mdp: &TabularMdp) -> QTable {
        let mut q = QTable::zeros(mdp);
        for s in mdp.non_terminal_states() {
            for a in 0..mdp.num_actions() {
                q.add(s, a, self.get(s, a));
            }
        }
        q
    }
}
