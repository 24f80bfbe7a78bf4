//! Moment-ratio certifiers of multi-level quantum coherence.
//!
//! An interference experiment on a state `ρ` with measurement `σ` over an
//! equally spaced spectrum yields a periodic detection probability `p(t)`.
//! The ratios `R_n = M_n / M_1^(n-1)` of its time moments are convex in both
//! the state and the measurement, so no faulty measurement can push them
//! above the largest value reachable by `k`-coherent states. Exceeding that
//! threshold certifies at least `(k+1)`-coherence.
//!
//! Modules:
//!
//! - [`quantum`]: states, Werner-like states, ℓ1 coherence norm.
//! - [`pattern`]: patterns, exact moments, certifiers, sample fitting.
//! - [`bounds`]: proven thresholds, frequency-grouped parametrization,
//!   polytope vertex tables, closed forms.
//! - [`thresholds`]: numerical maximization over `k`-coherent states and
//!   Werner decoherence thresholds.
//! - [`robustness`]: random-Hamiltonian drift of the measurement.
//! - [`approx`]: best approximation of a pattern by low-coherence mixtures.
//! - [`report`]: table reproduction, state specs and output documents used by
//!   the `cohcert` binary.
//!
//! ```
//! use coherence_cert::bounds::certify_r3;
//! use coherence_cert::pattern::{pattern_from_pure, ratio};
//! use coherence_cert::quantum::psi_star;
//!
//! let psi = psi_star(4)?;
//! let r3 = ratio(&pattern_from_pure(&psi, &psi)?, 3)?;
//! assert_eq!(certify_r3(r3)?.certified_level, 4);
//! # Ok::<(), coherence_cert::Error>(())
//! ```

pub mod error;
pub mod quantum;
pub mod pattern;
pub mod bounds;
pub mod optim;
pub mod thresholds;
pub mod robustness;
pub mod nnls;
pub mod approx;
pub mod report;

pub use error::{Error, Result};
