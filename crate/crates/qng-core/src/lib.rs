//! Numerical certification of mode-intrinsic and genuine non-Gaussian
//! entanglement of two-mode bosonic states.
//!
//! The library computes fidelity thresholds: the maximal fidelity between a
//! chosen two-mode target state and any state reachable by a passive
//! linear-optics circuit (mode-intrinsic threshold) or by a general
//! entangling Gaussian circuit (Gaussian threshold) acting on a product
//! state. A measured fidelity above the threshold certifies the
//! corresponding entanglement resource. A pure-loss channel model quantifies
//! how much transmission loss a certification tolerates.
//!
//! Module map:
//! - [`fock`]: truncated two-mode Fock space, elementary Gaussian unitaries,
//!   analytic overlap cross-checks.
//! - [`circuits`]: parametrized circuit families (entangling canonical form,
//!   passive form, Bloch-Messiah form) and fast state-side appliers.
//! - [`targets`]: target-state constructors (Fock pairs, NOON-like states,
//!   hybrid cat states, photon-subtracted squeezed states, core states).
//! - [`threshold`]: overlap matrix, spectral-norm inner maximization, grid
//!   and CMA-ES outer optimization with cutoff escalation, certification.
//! - [`cmaes`]: self-contained CMA-ES maximizer.
//! - [`loss`]: pure-loss channel, mixed-state fidelity, minimal-transmission
//!   search.
//! - [`verify`]: named oracle and figure-reproduction check suites shared by
//!   the CLI and the acceptance tests.

pub mod circuits;
pub mod cmaes;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod loss;
pub mod targets;
pub mod threshold;
pub mod verify;

pub use error::{Error, Result};
