use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    lambda_return_forward, nstep_is_update, nstep_onpolicy_update, nstep_treebackup_update,
    one_step_update, soft_q_lambda_episode, train, treebackup_return_direct,
    treebackup_return_explicit, treebackup_return_tdform, AlgoConfig, AlgorithmId, Behaviour,
    TrainOptions,
};
use crate::envs::{build_chain, build_random_mdp, build_two_state};
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};
use crate::sampling::{
    enumerate_trajectories_from, rollout_episode, sample_transition, SampleStream,
};
use crate::soft::{
    boltzmann_kl, boltzmann_policy, boltzmann_row_into, kl_penalty, soft_state_value,
    soft_value_iteration, soft_value_row, td_error_first, td_error_subsequent,
};
use crate::tables::{PolicyTable, QTable, Temperature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Reductions,
    TreebackupEquiv,
    IsUnbiased,
    LambdaEquiv,
    BehaviourIndependence,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identities,
        Suite::Reductions,
        Suite::TreebackupEquiv,
        Suite::IsUnbiased,
        Suite::LambdaEquiv,
        Suite::BehaviourIndependence,
        Suite::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Reductions => "reductions",
            Suite::TreebackupEquiv => "treebackup_equiv",
            Suite::IsUnbiased => "is_unbiased",
            Suite::LambdaEquiv => "lambda_equiv",
            Suite::BehaviourIndependence => "behaviour_independence",
            Suite::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "suite",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn from_errors(name: impl Into<String>, errors: &[f64], tolerance: f64) -> Self {
        // NaN counts as an infinite error
        let max_error = errors
            .iter()
            .map(|e| if e.is_nan() { f64::INFINITY } else { *e })
            .fold(0.0, f64::max);
        CheckResult {
            name: name.into(),
            cases: errors.len(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    fn new(suite: Suite, seed: u64, checks: Vec<CheckResult>) -> Self {
        VerificationReport {
            suite,
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

pub fn run_verification_suite(suite: Suite, seed: u64) -> Result<VerificationReport> {
    let checks = match suite {
        Suite::Identities => identities(seed)?,
        Suite::Reductions => reductions(seed)?,
        Suite::TreebackupEquiv => treebackup_equiv(seed)?,
        Suite::IsUnbiased => is_unbiased(seed)?,
        Suite::LambdaEquiv => lambda_equiv(seed)?,
        Suite::BehaviourIndependence => behaviour_independence(seed)?,
        Suite::Convergence => convergence(seed)?,
    };
    Ok(VerificationReport::new(suite, seed, checks))
}

fn random_q(mdp: &TabularMdp, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> QTable {
    QTable::from_fn(mdp, |_, _| rng.gen_range(lo..hi)).expect("finite entries")
}

fn random_rows(num_states: usize, num_actions: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..num_states)
        .map(|_| {
            let w: Vec<f64> = (0..num_actions).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
            let rest: f64 = row[1..].iter().sum();
            row[0] = 1.0 - rest;
            row
        })
        .collect()
}

fn random_policy(num_states: usize, num_actions: usize, rng: &mut ChaCha8Rng) -> PolicyTable {
    PolicyTable::new(random_rows(num_states, num_actions, rng)).expect("rows are distributions")
}

/// Random MDP where every row can reach the terminal state.
fn random_mdp(rng: &mut ChaCha8Rng, gamma: f64) -> Result<TabularMdp> {
    let ns = rng.gen_range(3..=6);
    let na = rng.gen_range(2..=4);
    build_random_mdp(ns, na, ns, (-1.0, 1.0), gamma, rng.gen())
}

fn first_live_state(mdp: &TabularMdp) -> usize {
    mdp.non_terminal_states()
        .next()
        .expect("some state is not terminal")
}

fn bits_error(a: f64, b: f64) -> f64 {
    if a.to_bits() == b.to_bits() {
        0.0
    } else {
        (a - b).abs().max(f64::MIN_POSITIVE)
    }
}

fn table_error(a: &QTable, b: &QTable) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| bits_error(*x, *y))
        .fold(0.0, f64::max)
}

fn identities(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, na) = (4, 5);
    let mut eq5 = Vec::new();
    let mut sandwich = Vec::new();
    let mut norm = Vec::new();
    let mut shift = Vec::new();
    let uniform = PolicyTable::uniform(ns, na);
    let mut pi = Vec::new();
    let mut shifted_pi = Vec::new();
    for tau in [0.1, 1.0, 10.0] {
        let tau = Temperature::new(tau)?;
        for _ in 0..1000 {
            let rows: Vec<Vec<f64>> = (0..ns)
                .map(|_| (0..na).map(|_| rng.gen_range(-10.0..10.0)).collect())
                .collect();
            let q = QTable::from_rows(&rows)?;
            let default = random_policy(ns, na, &mut rng);
            for s in 0..ns {
                let row = q.row(s);
                boltzmann_row_into(row, default.row(s), tau, &mut pi);
                let v = soft_value_row(row, default.row(s), tau);
                let expect_q: f64 = pi.iter().zip(row).map(|(p, x)| p * x).sum();
                let kl = kl_penalty(&pi, default.row(s))?;
                eq5.push((v - (expect_q - tau.get() * kl)).abs());
                norm.push((pi.iter().sum::<f64>() - 1.0).abs());

                let c = rng.gen_range(-100.0..100.0);
                let shifted: Vec<f64> = row.iter().map(|x| x + c).collect();
                boltzmann_row_into(&shifted, default.row(s), tau, &mut shifted_pi);
                shift.push(
                    pi.iter()
                        .zip(&shifted_pi)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                );

                let vu = soft_value_row(row, uniform.row(s), tau);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lower = max - tau.get() * (na as f64).ln();
                sandwich.push((lower - vu).max(vu - max).max(0.0));
            }
        }
    }
    Ok(vec![
        CheckResult::from_errors("value_expectation_identity", &eq5, 1e-10),
        CheckResult::from_errors("softmax_sandwich", &sandwich, 0.0),
        CheckResult::from_errors("boltzmann_normalisation", &norm, 1e-12),
        CheckResult::from_errors("boltzmann_shift_invariance", &shift, 1e-10),
    ])
}

fn reductions(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut onpolicy = Vec::new();
    let mut is = Vec::new();
    let mut tree = Vec::new();
    let mut stream = SampleStream::new(seed);
    while onpolicy.len() < 10_000 {
        let mdp = random_mdp(&mut rng, 0.9)?;
        let q = random_q(&mdp, &mut rng, -5.0, 5.0).with_terminals(&mdp)?;
        let default = random_policy(mdp.num_states(), mdp.num_actions(), &mut rng);
        let behaviour = random_policy(mdp.num_states(), mdp.num_actions(), &mut rng);
        let alpha = rng.gen_range(0.01..1.0);
        let tau = rng.gen_range(0.1..5.0);
        let live: Vec<usize> = mdp.non_terminal_states().collect();
        for _ in 0..100 {
            let s = live[rng.gen_range(0..live.len())];
            let a = rng.gen_range(0..mdp.num_actions());
            let tr = sample_transition(&mdp, s, a, &mut stream)?;
            let window = [tr];
            let mut reference = q.clone();
            let base = one_step_update(
                &mut reference,
                &tr,
                &AlgoConfig::new(AlgorithmId::SoftQ, alpha, 0.9, tau)?,
                &default,
            )?;
            let run = |id: AlgorithmId, out: &mut Vec<f64>| -> Result<()> {
                let cfg = AlgoConfig::new(id, alpha, 0.9, tau)?;
                let mut table = q.clone();
                let rec = match id {
                    AlgorithmId::NstepSoftQ => {
                        nstep_onpolicy_update(&mut table, &window, 0, &cfg, &default)?
                    }
                    AlgorithmId::NstepSoftQIs => {
                        nstep_is_update(&mut table, &window, 0, &cfg, &behaviour, &default)?
                    }
                    _ => nstep_treebackup_update(&mut table, &window, 0, &cfg, &default)?,
                };
                out.push(
                    bits_error(rec.increment, base.increment).max(table_error(&table, &reference)),
                );
                Ok(())
            };
            run(AlgorithmId::NstepSoftQ, &mut onpolicy)?;
            run(AlgorithmId::NstepSoftQIs, &mut is)?;
            run(AlgorithmId::NstepTreeBackup, &mut tree)?;
        }
    }

    let mut lambda_zero = Vec::new();
    for episode in 0..200 {
        let mdp = random_mdp(&mut rng, 0.9)?;
        let start = first_live_state(&mdp);
        let q0 = random_q(&mdp, &mut rng, -5.0, 5.0).with_terminals(&mdp)?;
        let default = random_policy(mdp.num_states(), mdp.num_actions(), &mut rng);
        let id = if episode % 2 == 0 {
            AlgorithmId::SoftQLambda
        } else {
            AlgorithmId::SoftQLambdaTreeBackup
        };
        let cfg = AlgoConfig::new(id, 0.3, 0.9, 0.8)?;
        let mut q = q0.clone();
        let mut stream = SampleStream::for_episode(seed, episode);
        let (traj, records) = soft_q_lambda_episode(
            &mut q,
            &mdp,
            &Behaviour::Uniform,
            start,
            &cfg,
            &default,
            200,
            &mut stream,
        )?;
        let mut replay = q0;
        for (tr, rec) in traj.transitions().iter().zip(&records) {
            let delta = td_error_subsequent(&replay, tr, &default, cfg.tau, cfg.gamma);
            let same_pair = rec.target_state == tr.state && rec.target_action == tr.action;
            let err = if same_pair {
                bits_error(rec.increment, cfg.alpha * delta)
            } else {
                f64::INFINITY
            };
            lambda_zero.push(err);
            replay.add(tr.state, tr.action, cfg.alpha * delta);
        }
        if records.len() != traj.len() {
            lambda_zero.push(f64::INFINITY);
        }
        lambda_zero.push(table_error(&q, &replay));
    }

    Ok(vec![
        CheckResult::from_errors("nstep_soft_q_n1_is_one_step", &onpolicy, 0.0),
        CheckResult::from_errors("nstep_soft_q_is_n1_is_one_step", &is, 0.0),
        CheckResult::from_errors("nstep_tree_backup_n1_is_one_step", &tree, 0.0),
        CheckResult::from_errors("soft_q_lambda_0_is_value_baseline_step", &lambda_zero, 0.0),
    ])
}

/// Random frozen-Q tree-backup instance: a terminated episode, a start
/// index and a window length for which every return form is defined.
struct TreeInstance {
    q: QTable,
    default: PolicyTable,
    cfg: AlgoConfig,
    episode: Vec<Transition>,
    t: usize,
}

fn tree_instance(rng: &mut ChaCha8Rng, stream: u64, seed: u64) -> Result<TreeInstance> {
    loop {
        let mdp = random_mdp(rng, 0.9)?;
        let q = random_q(&mdp, rng, -3.0, 3.0).with_terminals(&mdp)?;
        let default = random_policy(mdp.num_states(), mdp.num_actions(), rng);
        let uniform = PolicyTable::uniform_for(&mdp);
        let n = rng.gen_range(1..=5);
        let cfg = AlgoConfig::new(
            AlgorithmId::NstepTreeBackup,
            0.5,
            0.9,
            rng.gen_range(0.2..2.0),
        )?
        .with_n(n)?;
        let traj = rollout_episode(
            &mdp,
            &uniform,
            first_live_state(&mdp),
            200,
            &mut SampleStream::for_episode(seed, stream),
        )?;
        if !traj.terminated() {
            continue;
        }
        let t = rng.gen_range(0..traj.len());
        return Ok(TreeInstance {
            q,
            default,
            cfg,
            episode: traj.transitions().to_vec(),
            t,
        });
    }
}

/// `Q(s_t, a_t) + δ_t + Σ_{k>t} δ'_k Π_{i=t+1}^{k} γ π^B(a_i|s_i)` with the
/// action-value baseline `δ'_k = r − τ KL(s_k) + γ V_Q(s') − Q(s_k, a_k)`.
fn tree_q_baseline_sum(x: &TreeInstance) -> f64 {
    let (q, d, cfg, ep, t) = (&x.q, &x.default, &x.cfg, &x.episode, x.t);
    let end = (ep.len() - 1).min(t + cfg.n - 1);
    let mut g = q.get(ep[t].state, ep[t].action) + td_error_first(q, &ep[t], d, cfg.tau, cfg.gamma);
    let mut weight = 1.0;
    for tr in &ep[t + 1..=end] {
        weight *= cfg.gamma * boltzmann_policy(q, tr.state, d, cfg.tau)[tr.action];
        let baseline_shift = soft_state_value(q, tr.state, d, cfg.tau) - q.get(tr.state, tr.action);
        g += weight * (td_error_subsequent(q, tr, d, cfg.tau, cfg.gamma) + baseline_shift);
    }
    g
}

/// The exact gap `direct − tdform` predicted by expanding both forms:
/// `Σ_{k=t}^{end−1} W_k γ τ KL_{k+1} − Σ_{k=t+1}^{end} W_k (Q_k − V_k)` plus the
/// trailing correction when the window ends before termination.
fn tree_form_gap(
    q: &QTable,
    d: &PolicyTable,
    cfg: &AlgoConfig,
    ep: &[Transition],
    t: usize,
) -> f64 {
    let end = (ep.len() - 1).min(t + cfg.n - 1);
    let tau = cfg.tau;
    let mut gap = 0.0;
    let mut weight = 1.0;
    let mut prod = 1.0;
    for k in t..=end {
        let tr = &ep[k];
        if k > t {
            let p = boltzmann_policy(q, tr.state, d, tau)[tr.action];
            weight *= cfg.gamma * p;
            prod *= p;
            gap -= weight * (q.get(tr.state, tr.action) - soft_state_value(q, tr.state, d, tau));
        }
        if k < end {
            gap += weight * cfg.gamma * tau.get() * boltzmann_kl(q, ep[k + 1].state, d, tau);
        }
    }
    if !ep[end].done {
        let Some(after) = ep.get(end + 1) else {
            return f64::NAN;
        };
        gap += cfg.gamma.powi(cfg.n as i32) * q.get(after.state, after.action) * prod;
    }
    gap
}

fn treebackup_equiv(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direct_vs_td = Vec::new();
    let mut explicit_vs_qbase = Vec::new();
    let mut gap = Vec::new();
    let mut stream = 0;
    while direct_vs_td.len() < 100 {
        let x = tree_instance(&mut rng, stream, seed)?;
        stream += 1;
        let td = match treebackup_return_tdform(&x.q, &x.episode, x.t, &x.cfg, &x.default) {
            Ok(v) => v,
            // window runs past the data: no a_{t+n} for the trailing term
            Err(_) => continue,
        };
        let direct = treebackup_return_direct(&x.q, &x.episode, x.t, &x.cfg, &x.default)?;
        let explicit = treebackup_return_explicit(&x.q, &x.episode, x.t, &x.cfg, &x.default)?;
        direct_vs_td.push((direct - td).abs());
        explicit_vs_qbase.push((explicit - tree_q_baseline_sum(&x)).abs());
        gap.push((direct - td - tree_form_gap(&x.q, &x.default, &x.cfg, &x.episode, x.t)).abs());
    }
    Ok(vec![
        CheckResult::from_errors("direct_vs_tdform", &direct_vs_td, 1e-10),
        CheckResult::from_errors(
            "explicit_vs_action_value_baseline_sum",
            &explicit_vs_qbase,
            1e-10,
        ),
        CheckResult::from_errors("direct_minus_tdform_matches_expansion", &gap, 1e-10),
    ])
}

/// Expected frozen-Q increment (α = 1) of `update` for the first pair
/// `(s0, a0)` under `behaviour`, by enumeration of every continuation.
fn expected_increment(
    mdp: &TabularMdp,
    behaviour: &PolicyTable,
    s0: usize,
    a0: usize,
    horizon: usize,
    mut update: impl FnMut(&[Transition]) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (traj, p) in enumerate_trajectories_from(mdp, behaviour, s0, Some(a0), horizon, 1_000_000)?
    {
        total += p * update(traj.transitions())?;
    }
    Ok(total)
}

/// Two-state MDP with a seeded random Q-table, temperature and default policy.
fn two_state_setup(seed: u64) -> Result<(TabularMdp, QTable, PolicyTable, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdp = build_two_state(0.9)?;
    let q = random_q(&mdp, &mut rng, -2.0, 2.0).with_terminals(&mdp)?;
    let default = random_policy(3, 2, &mut rng);
    Ok((mdp, q, default, rng.gen_range(0.3..1.5)))
}

fn is_unbiased(seed: u64) -> Result<Vec<CheckResult>> {
    let (mdp, q, default, tau) = two_state_setup(seed)?;
    let cfg = AlgoConfig::new(AlgorithmId::NstepSoftQIs, 1.0, 0.9, tau)?
        .with_n(3)?
        .frozen();
    let target = Behaviour::Boltzmann.to_table(&q, &default, cfg.tau);
    let uniform = PolicyTable::uniform_for(&mdp);
    let eps = Behaviour::EpsilonBoltzmann(0.3).to_table(&q, &default, cfg.tau);
    let mut against_uniform = Vec::new();
    let mut against_eps = Vec::new();
    for s0 in 0..2 {
        for a0 in 0..2 {
            let expect = |b: &PolicyTable| {
                expected_increment(&mdp, b, s0, a0, 3, |ep| {
                    let mut table = q.clone();
                    Ok(nstep_is_update(&mut table, ep, 0, &cfg, b, &default)?.increment)
                })
            };
            let on = expect(&target)?;
            against_uniform.push((expect(&uniform)? - on).abs());
            against_eps.push((expect(&eps)? - on).abs());
        }
    }
    Ok(vec![
        CheckResult::from_errors("uniform_vs_boltzmann", &against_uniform, 1e-12),
        CheckResult::from_errors("epsilon_boltzmann_vs_boltzmann", &against_eps, 1e-12),
    ])
}

fn behaviour_independence(seed: u64) -> Result<Vec<CheckResult>> {
    let (mdp, q, default, tau) = two_state_setup(seed)?;
    let cfg = AlgoConfig::new(AlgorithmId::NstepTreeBackup, 1.0, 0.9, tau)?
        .with_n(3)?
        .frozen();
    let uniform_default = PolicyTable::uniform_for(&mdp);
    let star = soft_value_iteration(&mdp, &uniform_default, cfg.tau, 1e-14, 100_000)?.q;
    let uniform = PolicyTable::uniform_for(&mdp);

    let mut across = Vec::new();
    let mut at_optimum = Vec::new();
    let eps = Behaviour::EpsilonBoltzmann(0.3).to_table(&q, &default, cfg.tau);
    for s0 in 0..2 {
        for a0 in 0..2 {
            let u = expected_increment(&mdp, &uniform, s0, a0, 3, |ep| {
                tree_increment(&q, &default, &cfg, ep)
            })?;
            let e = expected_increment(&mdp, &eps, s0, a0, 3, |ep| {
                tree_increment(&q, &default, &cfg, ep)
            })?;
            across.push((u - e).abs());
            let z = expected_increment(&mdp, &uniform, s0, a0, 3, |ep| {
                tree_increment(&star, &uniform_default, &cfg, ep)
            })?;
            at_optimum.push(z.abs());
        }
    }
    Ok(vec![
        CheckResult::from_errors("uniform_vs_epsilon_boltzmann", &across, 1e-12),
        CheckResult::from_errors(
            "soft_optimum_is_fixed_point_under_uniform",
            &at_optimum,
            1e-10,
        ),
    ])
}

fn tree_increment(q: &QTable, d: &PolicyTable, cfg: &AlgoConfig, ep: &[Transition]) -> Result<f64> {
    let mut table = q.clone();
    Ok(nstep_treebackup_update(&mut table, ep, 0, cfg, d)?.increment)
}

fn lambda_equiv(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut stream = 0;
    for id in [AlgorithmId::SoftQLambda, AlgorithmId::SoftQLambdaTreeBackup] {
        for lambda in [0.3, 0.8, 1.0] {
            let mut errors = Vec::new();
            while errors.len() < 50 {
                let mdp = random_mdp(&mut rng, 0.9)?;
                let q = random_q(&mdp, &mut rng, -3.0, 3.0).with_terminals(&mdp)?;
                let default = random_policy(mdp.num_states(), mdp.num_actions(), &mut rng);
                let cfg = AlgoConfig::new(id, 0.1, 0.9, rng.gen_range(0.2..2.0))?
                    .with_lambda(lambda)?
                    .frozen();
                let mut table = q.clone();
                let mut rng_ep = SampleStream::for_episode(seed, stream);
                stream += 1;
                let start = first_live_state(&mdp);
                let (traj, records) = soft_q_lambda_episode(
                    &mut table,
                    &mdp,
                    &Behaviour::Uniform,
                    start,
                    &cfg,
                    &default,
                    500,
                    &mut rng_ep,
                )?;
                if !traj.terminated() {
                    continue;
                }
                errors.push(lambda_gap(
                    &q,
                    &default,
                    &cfg,
                    traj.transitions(),
                    &records,
                )?);
            }
            let mode = if id == AlgorithmId::SoftQLambda {
                "on_policy"
            } else {
                "tree_backup"
            };
            checks.push(CheckResult::from_errors(
                format!("{mode}_lambda_{lambda}"),
                &errors,
                1e-9,
            ));
        }
    }
    Ok(checks)
}

/// Largest per-pair difference between summed backward increments and
/// `Σ_t α (G^λ_t − Q(s_t, a_t))`.
fn lambda_gap(
    q: &QTable,
    default: &PolicyTable,
    cfg: &AlgoConfig,
    episode: &[Transition],
    records: &[crate::algorithms::UpdateRecord],
) -> Result<f64> {
    let offpolicy = cfg.algorithm_id == AlgorithmId::SoftQLambdaTreeBackup;
    let mut backward: HashMap<(usize, usize), f64> = HashMap::new();
    for r in records {
        *backward
            .entry((r.target_state, r.target_action))
            .or_default() += r.increment;
    }
    let mut forward: HashMap<(usize, usize), f64> = HashMap::new();
    for (t, tr) in episode.iter().enumerate() {
        let g = lambda_return_forward(q, episode, t, cfg, default, offpolicy)?;
        *forward.entry((tr.state, tr.action)).or_default() +=
            cfg.alpha * (g - q.get(tr.state, tr.action));
    }
    let mut worst: f64 = 0.0;
    for key in backward.keys().chain(forward.keys()) {
        let b = backward.get(key).copied().unwrap_or(0.0);
        let f = forward.get(key).copied().unwrap_or(0.0);
        worst = worst.max((b - f).abs());
    }
    Ok(worst)
}

fn convergence(seed: u64) -> Result<Vec<CheckResult>> {
    let mdp = build_chain(5, 0.95)?;
    let default = PolicyTable::uniform_for(&mdp);
    let tau = Temperature::new(0.5)?;
    let star = soft_value_iteration(&mdp, &default, tau, 1e-12, 100_000)?.q;
    let opts = TrainOptions {
        episodes: 20_000,
        max_steps: 1_000,
        start: 0,
        seed,
    };
    let runs = [
        (
            "soft_q",
            AlgoConfig::new(AlgorithmId::SoftQ, 0.1, 0.95, 0.5)?,
        ),
        (
            "nstep_tree_backup_n3",
            AlgoConfig::new(AlgorithmId::NstepTreeBackup, 0.1, 0.95, 0.5)?.with_n(3)?,
        ),
        (
            "soft_q_lambda_tree_backup_0.8",
            AlgoConfig::new(AlgorithmId::SoftQLambdaTreeBackup, 0.1, 0.95, 0.5)?
                .with_lambda(0.8)?,
        ),
    ];
    let mut checks = Vec::new();
    for (name, cfg) in runs {
        let (_, curve) = train(
            &mdp,
            &cfg,
            &Behaviour::Uniform,
            &default,
            &opts,
            Some(&star),
        )?;
        let err = curve
            .last()
            .and_then(|r| r.q_error_sup)
            .unwrap_or(f64::INFINITY);
        checks.push(CheckResult::from_errors(name, &[err], 0.1));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.as_str().parse::<Suite>().unwrap(), suite);
        }
        assert!(matches!(
            "everything".parse::<Suite>(),
            Err(Error::Unknown { .. })
        ));
    }

    #[test]
    fn nan_counts_as_failure() {
        let c = CheckResult::from_errors("x", &[0.0, f64::NAN], 1.0);
        assert!(!c.passed);
        assert_eq!(c.max_error, f64::INFINITY);
    }

    #[test]
    fn identities_pass() {
        let report = run_verification_suite(Suite::Identities, 11).unwrap();
        assert!(report.passed, "{}", report.to_json_string());
        assert!(report.checks.iter().all(|c| c.cases == 3 * 1000 * 4));
    }

    #[test]
    fn is_unbiased_passes() {
        let report = run_verification_suite(Suite::IsUnbiased, 2).unwrap();
        assert!(report.passed, "{}", report.to_json_string());
    }
}
