//! Tabular entropy-regularised reinforcement learning.
//!
//! Soft Q-learning and its multi-step relatives (n-step on-policy,
//! importance-sampled, Tree Backup, Soft Q(λ)) over finite MDPs, together
//! with exact oracles for checking them: soft value iteration and
//! exhaustive trajectory enumeration.
//!
//! ```
//! use softq::{envs, soft, tables::{PolicyTable, Temperature}};
//!
//! let mdp = envs::build_chain(5, 0.95).unwrap();
//! let default = PolicyTable::uniform_for(&mdp);
//! let tau = Temperature::new(0.5).unwrap();
//! let vi = soft::soft_value_iteration(&mdp, &default, tau, 1e-10, 10_000).unwrap();
//! assert!(vi.residual < 1e-10);
//! ```

pub mod algorithms;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod sampling;
pub mod soft;
pub mod tables;

pub use error::{Error, Result};
