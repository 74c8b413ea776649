//! Benchmark topology generators.

use crate::model::{FlowSpec, NetworkSpec, NodeSpec};

/// Parameters of the ring benchmark family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    /// Server latency, seconds.
    pub latency_s: f64,
    /// Server rate, bits per second.
    pub rate_bps: f64,
    /// Per-flow rate, bits per second. `None` picks `0.7 * rate_bps / n`.
    pub flow_rate_bps: Option<f64>,
    /// Per-flow source burstiness, bits.
    pub burst_bits: f64,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams {
            latency_s: 0.001,
            rate_bps: 1e7,
            flow_rate_bps: None,
            burst_bits: 1000.0,
        }
    }
}

/// Directed ring of `n` identical servers `N1..Nn` carrying `n` identical
/// flows; flow `Fk` starts at `Nk` and crosses `n-1` consecutive servers.
///
/// With two servers each flow has a single-node path, so the induced graph
/// has no transit edges at all.
pub fn ring(n: usize, params: RingParams) -> NetworkSpec {
    assert!(n >= 2, "ring needs at least 2 servers");
    let flow_rate = params
        .flow_rate_bps
        .unwrap_or(0.7 * params.rate_bps / n as f64);
    let nodes = (1..=n)
        .map(|k| NodeSpec {
            id: format!("N{k}"),
            rate_bps: params.rate_bps,
            latency_s: params.latency_s,
            packetization_s: None,
            line_rate_bps: None,
            max_packet_bits: None,
            extra_delay_bounds: vec![],
        })
        .collect();
    let flows = (1..=n)
        .map(|k| FlowSpec {
            id: format!("F{k}"),
            rate_bps: flow_rate,
            burst_bits: params.burst_bits,
            path: (0..n - 1).map(|j| format!("N{}", (k - 1 + j) % n + 1)).collect(),
        })
        .collect();
    NetworkSpec { nodes, flows }
}

/// A 12-port network of two overlapping rings with four flows, the standard
/// cyclic-dependency example used by the tests and the docs.
///
/// The outer ring is O6..O10,O5..O1 with shortcuts through O11 and O12;
/// flows f_r and f_bl travel the outer ring in opposite phases, f_g takes
/// the O11 shortcut and f_br the O12 shortcut.
pub fn cyclic_example() -> NetworkSpec {
    let nodes = (1..=12)
        .map(|k| NodeSpec {
            id: format!("O{k}"),
            rate_bps: 1e7,
            latency_s: 0.001,
            packetization_s: None,
            line_rate_bps: None,
            max_packet_bits: None,
            extra_delay_bounds: vec![],
        })
        .collect();
    let flow = |id: &str, path: &[&str]| FlowSpec {
        id: id.to_string(),
        rate_bps: 1e6,
        burst_bits: 1000.0,
        path: path.iter().map(|s| s.to_string()).collect(),
    };
    NetworkSpec {
        nodes,
        flows: vec![
            flow("f_r", &["O5", "O4", "O3", "O2", "O1", "O6", "O7", "O8", "O9"]),
            flow("f_bl", &["O6", "O7", "O8", "O9", "O10", "O5", "O4", "O3", "O2"]),
            flow("f_g", &["O6", "O7", "O11", "O3", "O2"]),
            flow("f_br", &["O5", "O4", "O12", "O8", "O9"]),
        ],
    }
}

/// Two-node tandem carrying one flow; the smallest feedforward example.
pub fn tandem() -> NetworkSpec {
    NetworkSpec {
        nodes: ["A", "B"]
            .iter()
            .map(|id| NodeSpec {
                id: id.to_string(),
                rate_bps: 1e7,
                latency_s: 0.001,
                packetization_s: None,
                line_rate_bps: None,
                max_packet_bits: None,
                extra_delay_bounds: vec![],
            })
            .collect(),
        flows: vec![FlowSpec {
            id: "f".into(),
            rate_bps: 1e6,
            burst_bits: 1000.0,
            path: vec!["A".into(), "B".into()],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_network;

    #[test]
    fn ring_defaults_match_documented_sizes() {
        let net = build_network(&ring(5, RingParams::default())).unwrap();
        assert_eq!(net.node_count(), 5);
        assert_eq!(net.flow_count(), 5);
        for f in net.flows() {
            assert_eq!(f.path.len(), 4);
            assert_eq!(f.rate_bps, 0.7 * 1e7 / 5.0);
        }
        assert!(net.has_cycle());
    }

    #[test]
    fn two_server_ring_is_edgeless() {
        let net = build_network(&ring(2, RingParams::default())).unwrap();
        assert_eq!(net.edge_count(), 0);
        assert!(!net.has_cycle());
    }

    #[test]
    fn ring25_matches_largest_benchmark_size() {
        let net = build_network(&ring(25, RingParams::default())).unwrap();
        assert_eq!(net.node_count(), 25);
        assert_eq!(net.flow_count(), 25);
        for f in net.flows() {
            assert_eq!(f.path.len(), 24);
        }
    }
}
