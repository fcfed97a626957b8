//! Test-side oracles, written directly from the formulas without going
//! through the library's soft-value code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softq::mdp::{TabularMdp, Transition};
use softq::tables::{PolicyTable, QTable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// τ log Σ_a d(a) exp(Q(a)/τ), max-shifted.
pub fn value(q: &[f64], d: &[f64], tau: f64) -> f64 {
    let m = q
        .iter()
        .zip(d)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = q
        .iter()
        .zip(d)
        .map(|(&v, &p)| p * ((v - m) / tau).exp())
        .sum();
    m + tau * s.ln()
}

pub fn boltzmann(q: &[f64], d: &[f64], tau: f64) -> Vec<f64> {
    let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = q
        .iter()
        .zip(d)
        .map(|(&v, &p)| p * ((v - m) / tau).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn kl(p: &[f64], d: &[f64]) -> f64 {
    p.iter()
        .zip(d)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// Per-state quantities of a frozen table: V, π^B and KL(π^B‖π^d), with
/// V = KL = 0 at terminal states.
pub struct Frozen {
    pub v: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub kl: Vec<f64>,
}

impl Frozen {
    pub fn new(q: &QTable, d: &PolicyTable, tau: f64) -> Self {
        let mut out = Frozen {
            v: Vec::new(),
            pi: Vec::new(),
            kl: Vec::new(),
        };
        for s in 0..q.num_states() {
            let pi = boltzmann(q.row(s), d.row(s), tau);
            if q.is_terminal(s) {
                out.v.push(0.0);
                out.kl.push(0.0);
            } else {
                out.v.push(value(q.row(s), d.row(s), tau));
                out.kl.push(kl(&pi, d.row(s)));
            }
            out.pi.push(pi);
        }
        out
    }

    pub fn next_value(&self, tr: &Transition) -> f64 {
        if tr.done {
            0.0
        } else {
            self.v[tr.next_state]
        }
    }
}

pub fn random_q(mdp: &TabularMdp, range: f64, rng: &mut ChaCha8Rng) -> QTable {
    QTable::from_fn(mdp, |_, _| rng.gen_range(-range..range))
        .unwrap()
        .with_terminals(mdp)
        .unwrap()
}

pub fn random_policy(ns: usize, na: usize, rng: &mut ChaCha8Rng) -> PolicyTable {
    let rows = (0..ns)
        .map(|_| {
            let w: Vec<f64> = (0..na).map(|_| rng.gen_range(0.1..1.0)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        })
        .collect();
    PolicyTable::new(rows).unwrap()
}

/// Plain soft value iteration, run to a fixed number of sweeps.
pub fn value_iteration(mdp: &TabularMdp, d: &PolicyTable, tau: f64, sweeps: usize) -> QTable {
    let mut q = QTable::zeros(mdp);
    for _ in 0..sweeps {
        q = bellman(mdp, &q, d, tau);
    }
    q
}

pub fn bellman(mdp: &TabularMdp, q: &QTable, d: &PolicyTable, tau: f64) -> QTable {
    let v: Vec<f64> = (0..mdp.num_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                0.0
            } else {
                value(q.row(s), d.row(s), tau)
            }
        })
        .collect();
    QTable::from_fn(mdp, |s, a| {
        if mdp.is_terminal(s) {
            return 0.0;
        }
        let ev: f64 = mdp
            .transition_row(s, a)
            .iter()
            .zip(&v)
            .map(|(p, x)| p * x)
            .sum();
        mdp.reward(s, a) + mdp.gamma() * ev
    })
    .unwrap()
}

/// Every trajectory of at most `horizon` steps from `(s0, a0)`, with its
/// probability under `b` (the first action is given).
pub fn enumerate(
    mdp: &TabularMdp,
    b: &[Vec<f64>],
    s0: usize,
    a0: usize,
    horizon: usize,
) -> Vec<(Vec<Transition>, f64)> {
    let mut out = Vec::new();
    walk(
        mdp,
        b,
        s0,
        Some(a0),
        horizon,
        &mut Vec::new(),
        1.0,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    mdp: &TabularMdp,
    b: &[Vec<f64>],
    s: usize,
    forced: Option<usize>,
    horizon: usize,
    prefix: &mut Vec<Transition>,
    p: f64,
    out: &mut Vec<(Vec<Transition>, f64)>,
) {
    for a in 0..mdp.num_actions() {
        let pa = match forced {
            Some(f) if f == a => 1.0,
            Some(_) => 0.0,
            None => b[s][a],
        };
        if pa == 0.0 {
            continue;
        }
        for (s2, &ps) in mdp.transition_row(s, a).iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            let done = mdp.is_terminal(s2);
            prefix.push(Transition {
                t: prefix.len(),
                state: s,
                action: a,
                reward: mdp.reward(s, a),
                next_state: s2,
                done,
            });
            let p2 = p * pa * ps;
            if done || prefix.len() == horizon {
                out.push((prefix.clone(), p2));
            } else {
                walk(mdp, b, s2, None, horizon, prefix, p2, out);
            }
            prefix.pop();
        }
    }
}

pub fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m: f64, x| {
        if x.is_nan() {
            f64::INFINITY
        } else {
            m.max(x.abs())
        }
    })
}
