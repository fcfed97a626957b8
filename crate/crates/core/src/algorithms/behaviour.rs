use crate::error::Result;
use crate::soft::boltzmann_row_into;
use crate::tables::{PolicyTable, QTable, Temperature};

/// Policy that generates the data.
///
/// The Boltzmann-based variants read the live Q-table at every step.
#[derive(Debug, Clone, PartialEq)]
pub enum Behaviour {
    /// π^B_Q itself (on-policy).
    Boltzmann,
    Uniform,
    /// `(1 − ε) π^B_Q + ε · uniform`.
    EpsilonBoltzmann(f64),
    Table(PolicyTable),
}

impl Behaviour {
    pub fn epsilon_boltzmann(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(crate::Error::invalid(
                "epsilon",
                format!("{epsilon} is outside [0, 1]"),
            ));
        }
        Ok(Behaviour::EpsilonBoltzmann(epsilon))
    }

    /// Action distribution at `s`, written into `out`.
    pub fn probs_into(
        &self,
        q: &QTable,
        s: usize,
        default_policy: &PolicyTable,
        tau: Temperature,
        out: &mut Vec<f64>,
    ) {
        match self {
            Behaviour::Boltzmann => boltzmann_row_into(q.row(s), default_policy.row(s), tau, out),
            Behaviour::Uniform => {
                let n = q.num_actions();
                out.clear();
                out.resize(n, 1.0 / n as f64);
            }
            Behaviour::EpsilonBoltzmann(eps) => {
                boltzmann_row_into(q.row(s), default_policy.row(s), tau, out);
                let uniform = eps / out.len() as f64;
                for p in out.iter_mut() {
                    *p = (1.0 - eps) * *p + uniform;
                }
            }
            Behaviour::Table(table) => {
                out.clear();
                out.extend_from_slice(table.row(s));
            }
        }
    }

    /// Materialises the behaviour for a fixed Q-table.
    pub fn to_table(
        &self,
        q: &QTable,
        default_policy: &PolicyTable,
        tau: Temperature,
    ) -> PolicyTable {
        let mut rows = Vec::with_capacity(q.num_states());
        let mut buf = Vec::new();
        for s in 0..q.num_states() {
            self.probs_into(q, s, default_policy, tau, &mut buf);
            rows.push(buf.clone());
        }
        // each row is a distribution by construction
        PolicyTable::new(rows).expect("behaviour rows are distributions")
    }

    pub fn id(&self) -> String {
        match self {
            Behaviour::Boltzmann => "boltzmann".to_string(),
            Behaviour::Uniform => "uniform".to_string(),
            Behaviour::EpsilonBoltzmann(eps) => format!("epsilon_boltzmann({eps})"),
            Behaviour::Table(_) => "table".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_mixture() {
        let q = QTable::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let d = PolicyTable::uniform(1, 2);
        let tau = Temperature::new(1.0).unwrap();
        let mut out = Vec::new();
        Behaviour::EpsilonBoltzmann(0.0).probs_into(&q, 0, &d, tau, &mut out);
        let mut pb = Vec::new();
        Behaviour::Boltzmann.probs_into(&q, 0, &d, tau, &mut pb);
        assert_eq!(out, pb);
        Behaviour::EpsilonBoltzmann(1.0).probs_into(&q, 0, &d, tau, &mut out);
        assert_eq!(out, vec![0.5, 0.5]);
        Behaviour::EpsilonBoltzmann(0.3).probs_into(&q, 0, &d, tau, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Behaviour::epsilon_boltzmann(1.2).is_err());
    }
}
