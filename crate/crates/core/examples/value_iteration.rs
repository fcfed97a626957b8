//! Soft value iteration on a 5x5 gridworld, printing V* and the most likely
//! action of the Boltzmann policy in each cell.
//!
//! ```text
//! cargo run --example value_iteration
//! ```

use softq::envs::{build_gridworld, DOWN, LEFT, RIGHT, UP};
use softq::soft::{
    boltzmann_policy, soft_bellman_operator, soft_state_value, soft_value_iteration,
};
use softq::tables::{PolicyTable, Temperature};

pub fn run() -> softq::Result<()> {
    let (width, height) = (5, 5);
    let mdp = build_gridworld(width, height, (4, 4), -1.0, 0.95)?;
    let default = PolicyTable::uniform_for(&mdp);
    let tau = Temperature::new(1.0)?;

    let vi = soft_value_iteration(&mdp, &default, tau, 1e-10, 10_000)?;
    let again = soft_bellman_operator(&mdp, &vi.q, &default, tau);
    println!(
        "converged after {} sweeps, residual {:.2e} (re-applied: {:.2e})",
        vi.iterations,
        vi.residual,
        again.sup_distance(&vi.q)
    );

    println!("\nV*:");
    for row in 0..height {
        let cells: Vec<String> = (0..width)
            .map(|col| {
                format!(
                    "{:8.3}",
                    soft_state_value(&vi.q, row * width + col, &default, tau)
                )
            })
            .collect();
        println!("{}", cells.join(""));
    }

    println!("\nmost likely action:");
    for row in 0..height {
        let mut line = String::new();
        for col in 0..width {
            let s = row * width + col;
            if mdp.is_terminal(s) {
                line.push_str(" G");
                continue;
            }
            let pi = boltzmann_policy(&vi.q, s, &default, tau);
            let best = (0..pi.len()).fold(0, |b, a| if pi[a] > pi[b] { a } else { b });
            let arrow = match best {
                UP => '^',
                DOWN => 'v',
                LEFT => '<',
                RIGHT => '>',
                _ => '?',
            };
            line.push(' ');
            line.push(arrow);
        }
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
