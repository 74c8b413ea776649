//! Worst-case delay-jitter and propagated-burstiness bounds for per-class
//! FIFO packet networks.
//!
//! The analysis follows the total-flow-analysis scheme: every output port is
//! abstracted as a rate-latency server, every flow as a leaky bucket, and
//! the unknowns — one delay-jitter bound per port, one burstiness bound per
//! (transit edge, flow) — are tied together by a pair of isotone maps whose
//! common fixpoint, when it exists, is a valid bound. Networks whose induced
//! graph is cyclic make the fixpoint genuinely recursive; this crate ships
//! four equivalent iteration schemes for it ([`solvers`]) together with an
//! exact oracle for the affine case ([`oracle`]) that certifies convergence
//! or divergence ahead of time.
//!
//! ```
//! use tfa_core::{gen, model, solvers};
//!
//! let net = model::build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
//! let out = solvers::run_sync(&net, &solvers::SolveOptions::default()).unwrap();
//! assert!(out.status.is_converged());
//! ```

pub mod calculus;
pub mod cuts;
pub mod error;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod report;
pub mod solvers;

pub use calculus::{GlobalMap, State};
pub use error::{Error, Result};
pub use model::{build_network, Network, NetworkSpec};
pub use solvers::{SolveOptions, SolveStatus, SolverOutcome};
