//! Nonlinear complementary attitude filtering on SO(3) with an on-line
//! fuzzy-scheduled correction gain.
//!
//! The crate is organized around a simulation-driven workflow:
//!
//! * [`so3`] — exact 3×3 rotation algebra: hat/vex maps, the anti-symmetric
//!   projection, the Rodrigues exponential, and attitude error metrics.
//! * [`sim`] — ground-truth rigid-body trajectories plus biased, noisy gyro
//!   and vector-observation measurements on a fixed sampling grid.
//! * [`filter`] — the complementary filter itself: manifold propagation of
//!   the attitude estimate, gyro-bias adaptation, and the measurement-space
//!   innovation that drives both.
//! * [`fuzzy`] — a Mamdani inference engine mapping attitude error and its
//!   rate to a gain increment, parameterized by 22 tunable scalars.
//! * [`abc`] — an artificial-bee-colony optimizer that tunes those scalars
//!   against a windowed tracking-error objective evaluated by full
//!   closed-loop simulation.
//! * [`harness`] — closed-loop runners, per-step trace records, summary
//!   metrics, and CSV emission.
//!
//! All randomness is driven by explicit seeds; two runs with the same
//! configuration produce bit-identical outputs.

pub mod abc;
pub mod filter;
pub mod fuzzy;
pub mod harness;
pub mod sim;
pub mod so3;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
