//! Shared benchmark fixtures.

use tfa_core::model::{build_network, Network};
use tfa_core::{gen, SolveOptions};

/// Rings that converge at every benchmarked size (load 0.08 keeps the
/// propagation loop gain below one up to 25 servers).
pub fn feasible_ring(n: usize) -> Network {
    let params = gen::RingParams {
        flow_rate_bps: Some(0.08 * 1e7 / n as f64),
        ..gen::RingParams::default()
    };
    build_network(&gen::ring(n, params)).expect("valid ring")
}

pub fn bench_options() -> SolveOptions {
    SolveOptions::default()
}
