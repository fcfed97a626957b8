//! Soft state value, Boltzmann policy, KL penalty and the two TD errors for
//! a single hand-written state.
//!
//! ```text
//! cargo run --example soft_values
//! ```

use softq::mdp::Transition;
use softq::soft::{
    boltzmann_kl, boltzmann_policy, soft_state_value, td_error_first, td_error_subsequent,
};
use softq::tables::{PolicyTable, QTable, Temperature};

pub fn run() -> softq::Result<()> {
    let q = QTable::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]])?;
    let default = PolicyTable::uniform(2, 2);

    for tau in [0.1, 1.0, 10.0] {
        let tau = Temperature::new(tau)?;
        let v = soft_state_value(&q, 0, &default, tau);
        let pi = boltzmann_policy(&q, 0, &default, tau);
        let kl = boltzmann_kl(&q, 0, &default, tau);
        println!(
            "tau = {:>4}: V = {v:.6}  pi = [{:.6}, {:.6}]  KL = {kl:.6}",
            tau.get(),
            pi[0],
            pi[1]
        );
        // V = E_pi[Q] - tau KL for the Boltzmann policy
        let expected_q = pi[0] * q.get(0, 0) + pi[1] * q.get(0, 1);
        assert!((v - (expected_q - tau.get() * kl)).abs() < 1e-12);
    }

    let tau = Temperature::new(1.0)?;
    let tr = Transition {
        t: 0,
        state: 1,
        action: 0,
        reward: 0.0,
        next_state: 0,
        done: false,
    };
    println!(
        "first-step TD error      {:.7}",
        td_error_first(&q, &tr, &default, tau, 0.9)
    );
    let back = Transition {
        state: 0,
        next_state: 1,
        ..tr
    };
    println!(
        "subsequent-step TD error {:.7}",
        td_error_subsequent(&q, &back, &default, tau, 0.9)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
