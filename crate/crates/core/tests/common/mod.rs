//! Seeded random-network generation shared by the integration suites.

// Not every suite uses every generator.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tfa_core::model::{build_network, FlowSpec, Network, NetworkSpec, NodeSpec};
use tfa_core::oracle;

pub struct RandomNetOptions {
    pub max_nodes: usize,
    pub max_flows: usize,
    /// Flow rates are rescaled so that the worst node utilization equals
    /// this value (keeps every sample locally stable).
    pub target_utilization: f64,
}

impl Default for RandomNetOptions {
    fn default() -> Self {
        RandomNetOptions {
            max_nodes: 8,
            max_flows: 6,
            target_utilization: 0.75,
        }
    }
}

/// A random locally-stable network. Deterministic in `seed`.
pub fn random_stable(seed: u64, opts: &RandomNetOptions) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=opts.max_nodes);
    let nodes: Vec<NodeSpec> = (0..n)
        .map(|i| NodeSpec {
            id: format!("n{i:02}"),
            rate_bps: rng.gen_range(5e6..2e7),
            latency_s: rng.gen_range(1e-4..5e-3),
            packetization_s: None,
            line_rate_bps: None,
            max_packet_bits: None,
            extra_delay_bounds: vec![],
        })
        .collect();
    let flow_count = rng.gen_range(1..=opts.max_flows);
    let mut flows: Vec<FlowSpec> = (0..flow_count)
        .map(|k| {
            let len = rng.gen_range(1..=n);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            FlowSpec {
                id: format!("f{k:02}"),
                rate_bps: rng.gen_range(1e5..2e6),
                burst_bits: rng.gen_range(100.0..5000.0),
                path: order[..len].iter().map(|&i| format!("n{i:02}")).collect(),
            }
        })
        .collect();

    // Rescale flow rates onto the utilization target.
    let worst = nodes
        .iter()
        .map(|node| {
            let total: f64 = flows
                .iter()
                .filter(|f| f.path.contains(&node.id))
                .map(|f| f.rate_bps)
                .sum();
            total / node.rate_bps
        })
        .fold(0.0f64, f64::max);
    if worst > 0.0 {
        let scale = opts.target_utilization / worst;
        for f in &mut flows {
            f.rate_bps *= scale;
        }
    }
    build_network(&NetworkSpec { nodes, flows }).expect("generated network is valid")
}

/// A random locally-stable network whose induced graph is acyclic.
pub fn random_acyclic(seed: u64, opts: &RandomNetOptions) -> Network {
    for attempt in 0..10_000 {
        let net = random_stable(seed.wrapping_mul(10_000).wrapping_add(attempt), opts);
        if !net.has_cycle() {
            return net;
        }
    }
    panic!("no acyclic sample found for seed {seed}");
}

/// A random cyclic network whose affine system has spectral radius well
/// below 1, i.e. every iteration scheme converges on it quickly.
pub fn random_cyclic_converging(seed: u64) -> Network {
    let opts = RandomNetOptions {
        target_utilization: 0.4,
        ..RandomNetOptions::default()
    };
    for attempt in 0..10_000 {
        let net = random_stable(seed.wrapping_mul(10_000).wrapping_add(attempt), &opts);
        if !net.has_cycle() {
            continue;
        }
        let sys = oracle::linearize(&net).expect("generated models are affine");
        match oracle::spectral_radius(&sys.matrix) {
            Ok(rho) if rho < 0.9 => return net,
            _ => continue,
        }
    }
    panic!("no converging cyclic sample found for seed {seed}");
}
