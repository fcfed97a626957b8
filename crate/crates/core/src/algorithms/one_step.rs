use super::{AlgoConfig, UpdateRecord};
use crate::error::{Error, Result};
use crate::mdp::Transition;
use crate::soft::td_error_first;
use crate::tables::{PolicyTable, QTable};

/// Soft Q-learning: `Q(s, a) += α (r + γ V_Q(s') − Q(s, a))`.
pub fn one_step_update(
    q: &mut QTable,
    tr: &Transition,
    cfg: &AlgoConfig,
    default_policy: &PolicyTable,
) -> Result<UpdateRecord> {
    if q.is_terminal(tr.state) {
        return Err(Error::TerminalState(tr.state));
    }
    let delta = td_error_first(q, tr, default_policy, cfg.tau, cfg.gamma);
    let increment = cfg.alpha * delta;
    if !cfg.frozen_q {
        q.add(tr.state, tr.action, increment);
    }
    Ok(UpdateRecord {
        time: tr.t,
        target_state: tr.state,
        target_action: tr.action,
        delta,
        increment,
        trace_snapshot_norm: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::AlgorithmId;
    use crate::mdp::TabularMdp;

    fn tr(state: usize, action: usize, reward: f64, next_state: usize, done: bool) -> Transition {
        Transition {
            t: 0,
            state,
            action,
            reward,
            next_state,
            done,
        }
    }

    #[test]
    fn full_step_terminal_backup() {
        let mdp = crate::envs::build_chain(2, 0.9).unwrap();
        let mut q = QTable::zeros(&mdp);
        let cfg = AlgoConfig::new(AlgorithmId::SoftQ, 1.0, 0.9, 1.0).unwrap();
        let d = PolicyTable::uniform_for(&mdp);
        one_step_update(&mut q, &tr(0, 1, 1.0, 1, true), &cfg, &d).unwrap();
        assert_eq!(q.get(0, 1), 1.0);
        assert_eq!(q.get(0, 0), 0.0);
    }

    #[test]
    fn zero_error_leaves_table_unchanged() {
        let mdp = crate::envs::build_chain(2, 0.9).unwrap();
        let mut q = QTable::zeros(&mdp);
        q.set(0, 1, 1.0).unwrap();
        let before = q.clone();
        let cfg = AlgoConfig::new(AlgorithmId::SoftQ, 0.5, 0.9, 1.0).unwrap();
        let rec = one_step_update(
            &mut q,
            &tr(0, 1, 1.0, 1, true),
            &cfg,
            &PolicyTable::uniform_for(&mdp),
        )
        .unwrap();
        assert_eq!(rec.delta, 0.0);
        assert_eq!(q, before);
    }

    #[test]
    fn converges_to_geometric_fixed_point() {
        let mdp = TabularMdp::new(vec![vec![vec![1.0]]], vec![vec![1.0]], &[], 0.9).unwrap();
        let mut q = QTable::zeros(&mdp);
        let cfg = AlgoConfig::new(AlgorithmId::SoftQ, 0.5, 0.9, 1.0).unwrap();
        let d = PolicyTable::uniform_for(&mdp);
        for _ in 0..2000 {
            one_step_update(&mut q, &tr(0, 0, 1.0, 0, false), &cfg, &d).unwrap();
        }
        assert!((q.get(0, 0) - 10.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_terminal_state_and_respects_frozen() {
        let mdp = crate::envs::build_chain(2, 0.9).unwrap();
        let mut q = QTable::zeros(&mdp);
        let d = PolicyTable::uniform_for(&mdp);
        let cfg = AlgoConfig::new(AlgorithmId::SoftQ, 0.5, 0.9, 1.0).unwrap();
        assert!(one_step_update(&mut q, &tr(1, 0, 0.0, 1, true), &cfg, &d).is_err());
        let rec = one_step_update(&mut q, &tr(0, 1, 1.0, 1, true), &cfg.frozen(), &d).unwrap();
        assert_eq!(rec.increment, 0.5);
        assert_eq!(q.get(0, 1), 0.0);
    }
}
