//! Network description, validation and the flow-induced directed graph.
//!
//! A network is a set of output ports (rate-latency servers) and a set of
//! leaky-bucket flows, each with a fixed simple path over the ports. The
//! graph induced by flow paths, its transit edges, and the `inc`/`out`/
//! `pred` set operators defined here are the vocabulary shared by every
//! analysis in this crate.
//!
//! All derived collections (edges, per-edge flow lists, the global
//! (edge, flow) pair index) are kept in one canonical order — lexicographic
//! by id — so that every floating-point summation downstream runs in a
//! reproducible order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk network description: two arrays, strict parsing.
///
/// The file format is TOML with `[[nodes]]` and `[[flows]]` tables; unknown
/// keys are rejected. See the repository README for the full grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub flows: Vec<FlowSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Service rate of the rate-latency server, bits per second.
    pub rate_bps: f64,
    /// Service latency, seconds.
    pub latency_s: f64,
    /// Fixed packetization delay, seconds. When absent and both
    /// `max_packet_bits` and `line_rate_bps` are given, defaults to
    /// `max_packet_bits / line_rate_bps`; otherwise 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packetization_s: Option<f64>,
    /// Transmission rate of the input line, bits per second.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_rate_bps: Option<f64>,
    /// Largest packet crossing the node, bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_packet_bits: Option<f64>,
    /// Extra affine delay bounds; the node's delay model is the minimum of
    /// the default form and every form listed here.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_delay_bounds: Vec<ExtraDelayBoundSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraDelayBoundSpec {
    pub constant_s: f64,
    /// Coefficients on incoming (edge, flow) burstinesses, seconds per bit.
    /// Every referenced pair must be incident to the owning node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<CoefficientSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    /// Transit edge written `tail>head`.
    pub edge: String,
    pub flow: String,
    pub seconds_per_bit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: String,
    /// Leaky-bucket rate, bits per second.
    pub rate_bps: f64,
    /// Leaky-bucket burstiness at the source, bits.
    pub burst_bits: f64,
    /// Ordered output ports; the last element is the final port before the
    /// flow's sink. Must be a simple path.
    pub path: Vec<String>,
}

impl NetworkSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("network spec serializes")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

/// A validated output port.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub rate_bps: f64,
    pub latency_s: f64,
    /// Resolved packetization delay (explicit value, `l_max/c`, or 0).
    pub packetization_s: f64,
    pub line_rate_bps: Option<f64>,
    pub max_packet_bits: Option<f64>,
    pub extra_delay_bounds: Vec<ExtraDelayBoundSpec>,
}

/// A validated flow; `path` holds node indices into [`Network::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: String,
    pub rate_bps: f64,
    pub burst_bits: f64,
    pub path: Vec<usize>,
}

/// A transit edge of the induced graph (indices into [`Network::nodes`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

/// One component of the global burstiness vector: flow `flow` on edge
/// `edge`, which is hop `hop` of the flow's path (`path[hop] -> path[hop+1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub edge: usize,
    pub flow: usize,
    pub hop: usize,
}

/// Per-node stability report.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEntry {
    pub node: String,
    pub utilization: f64,
    pub stable: bool,
}

/// Immutable, validated network with the derived transit-edge set and the
/// canonical (edge, flow) index. All queries are read-only.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    flows: Vec<Flow>,
    edges: Vec<Edge>,
    pairs: Vec<Pair>,
    node_lookup: HashMap<String, usize>,
    flow_lookup: HashMap<String, usize>,
    edge_lookup: HashMap<(usize, usize), usize>,
    pair_lookup: HashMap<(usize, usize), usize>,
    inc_pairs: Vec<Vec<usize>>,
    out_pairs: Vec<Vec<usize>>,
    inc_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    fresh_flows: Vec<Vec<usize>>,
    prev_pair: Vec<Option<usize>>,
}

/// Validate a parsed description and derive the induced graph.
pub fn build_network(spec: &NetworkSpec) -> Result<Network> {
    let mut nodes: Vec<Node> = Vec::with_capacity(spec.nodes.len());
    for ns in &spec.nodes {
        if ns.rate_bps <= 0.0 || !ns.rate_bps.is_finite() {
            return Err(Error::NonPositiveRate {
                id: ns.id.clone(),
                what: "rate_bps",
                value: ns.rate_bps,
            });
        }
        check_nonneg(&ns.id, "latency_s", ns.latency_s)?;
        if let Some(p) = ns.packetization_s {
            check_nonneg(&ns.id, "packetization_s", p)?;
        }
        if let Some(c) = ns.line_rate_bps {
            if c <= 0.0 || !c.is_finite() {
                return Err(Error::NonPositiveRate {
                    id: ns.id.clone(),
                    what: "line_rate_bps",
                    value: c,
                });
            }
        }
        if let Some(l) = ns.max_packet_bits {
            if l <= 0.0 || !l.is_finite() {
                return Err(Error::NonPositiveRate {
                    id: ns.id.clone(),
                    what: "max_packet_bits",
                    value: l,
                });
            }
        }
        for (k, form) in ns.extra_delay_bounds.iter().enumerate() {
            check_nonneg(&ns.id, "extra_delay_bounds.constant_s", form.constant_s)?;
            for coef in &form.coefficients {
                if coef.seconds_per_bit < 0.0 || !coef.seconds_per_bit.is_finite() {
                    return Err(Error::NegativeParameter {
                        id: format!("{}#extra[{k}]", ns.id),
                        what: "seconds_per_bit",
                        value: coef.seconds_per_bit,
                    });
                }
            }
        }
        let packetization = match (ns.packetization_s, ns.max_packet_bits, ns.line_rate_bps) {
            (Some(p), _, _) => p,
            (None, Some(l), Some(c)) => l / c,
            _ => 0.0,
        };
        if ns.latency_s + packetization <= 0.0 {
            return Err(Error::ZeroJitterFloor(ns.id.clone()));
        }
        nodes.push(Node {
            id: ns.id.clone(),
            rate_bps: ns.rate_bps,
            latency_s: ns.latency_s,
            packetization_s: packetization,
            line_rate_bps: ns.line_rate_bps,
            max_packet_bits: ns.max_packet_bits,
            extra_delay_bounds: ns.extra_delay_bounds.clone(),
        });
    }
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut node_lookup = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if node_lookup.insert(n.id.clone(), i).is_some() {
            return Err(Error::InvalidParams(format!("duplicate node id `{}`", n.id)));
        }
    }

    let mut flows: Vec<Flow> = Vec::with_capacity(spec.flows.len());
    for fs in &spec.flows {
        if fs.rate_bps <= 0.0 || !fs.rate_bps.is_finite() {
            return Err(Error::NonPositiveRate {
                id: fs.id.clone(),
                what: "rate_bps",
                value: fs.rate_bps,
            });
        }
        if fs.burst_bits <= 0.0 || !fs.burst_bits.is_finite() {
            return Err(Error::NonPositiveRate {
                id: fs.id.clone(),
                what: "burst_bits",
                value: fs.burst_bits,
            });
        }
        if fs.path.is_empty() {
            return Err(Error::EmptyPath(fs.id.clone()));
        }
        let mut seen = HashSet::new();
        let mut path = Vec::with_capacity(fs.path.len());
        for nid in &fs.path {
            let idx = *node_lookup.get(nid).ok_or_else(|| Error::UnknownNode {
                flow: fs.id.clone(),
                node: nid.clone(),
            })?;
            if !seen.insert(idx) {
                return Err(Error::DuplicatePathNode {
                    flow: fs.id.clone(),
                    node: nid.clone(),
                });
            }
            path.push(idx);
        }
        flows.push(Flow {
            id: fs.id.clone(),
            rate_bps: fs.rate_bps,
            burst_bits: fs.burst_bits,
            path,
        });
    }
    flows.sort_by(|a, b| a.id.cmp(&b.id));
    let mut flow_lookup = HashMap::new();
    for (i, f) in flows.iter().enumerate() {
        if flow_lookup.insert(f.id.clone(), i).is_some() {
            return Err(Error::InvalidParams(format!("duplicate flow id `{}`", f.id)));
        }
    }

    // Transit edges: consecutive path pairs across all flows, canonical order.
    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for f in &flows {
        for w in f.path.windows(2) {
            edge_set.insert((w[0], w[1]));
        }
    }
    let mut edge_keys: Vec<(usize, usize)> = edge_set.into_iter().collect();
    edge_keys.sort_by(|a, b| {
        (nodes[a.0].id.as_str(), nodes[a.1].id.as_str())
            .cmp(&(nodes[b.0].id.as_str(), nodes[b.1].id.as_str()))
    });
    let edges: Vec<Edge> = edge_keys
        .iter()
        .map(|&(tail, head)| Edge { tail, head })
        .collect();
    let edge_lookup: HashMap<(usize, usize), usize> = edge_keys
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i))
        .collect();

    // Canonical (edge, flow) index: edge order, then flow id order within an edge.
    let mut pairs: Vec<Pair> = Vec::new();
    for (ei, e) in edges.iter().enumerate() {
        for (fi, f) in flows.iter().enumerate() {
            for (hop, w) in f.path.windows(2).enumerate() {
                if w[0] == e.tail && w[1] == e.head {
                    pairs.push(Pair {
                        edge: ei,
                        flow: fi,
                        hop,
                    });
                }
            }
        }
    }
    let pair_lookup: HashMap<(usize, usize), usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.edge, p.flow), i))
        .collect();

    let mut inc_pairs = vec![Vec::new(); nodes.len()];
    let mut out_pairs = vec![Vec::new(); nodes.len()];
    for (pi, p) in pairs.iter().enumerate() {
        inc_pairs[edges[p.edge].head].push(pi);
        out_pairs[edges[p.edge].tail].push(pi);
    }
    let mut inc_edges = vec![Vec::new(); nodes.len()];
    let mut out_edges = vec![Vec::new(); nodes.len()];
    for (ei, e) in edges.iter().enumerate() {
        inc_edges[e.head].push(ei);
        out_edges[e.tail].push(ei);
    }
    let mut fresh_flows = vec![Vec::new(); nodes.len()];
    for (fi, f) in flows.iter().enumerate() {
        fresh_flows[f.path[0]].push(fi);
    }

    // For hop > 0, the pair one hop earlier on the same flow.
    let prev_pair: Vec<Option<usize>> = pairs
        .iter()
        .map(|p| {
            if p.hop == 0 {
                None
            } else {
                let path = &flows[p.flow].path;
                let prev_edge = edge_lookup[&(path[p.hop - 1], path[p.hop])];
                Some(pair_lookup[&(prev_edge, p.flow)])
            }
        })
        .collect();

    Ok(Network {
        nodes,
        flows,
        edges,
        pairs,
        node_lookup,
        flow_lookup,
        edge_lookup,
        pair_lookup,
        inc_pairs,
        out_pairs,
        inc_edges,
        out_edges,
        fresh_flows,
        prev_pair,
    })
}

fn check_nonneg(id: &str, what: &'static str, value: f64) -> Result<()> {
    if value < 0.0 || !value.is_finite() {
        return Err(Error::NegativeParameter {
            id: id.to_string(),
            what,
            value,
        });
    }
    Ok(())
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of (edge, flow) components of the burstiness vector.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.node_lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::NoSuchNode(id.to_string()))
    }

    pub fn flow_index(&self, id: &str) -> Result<usize> {
        self.flow_lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::NoSuchFlow(id.to_string()))
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx].id
    }

    pub fn flow_id(&self, idx: usize) -> &str {
        &self.flows[idx].id
    }

    /// Edge rendered as `tail>head`.
    pub fn edge_name(&self, idx: usize) -> String {
        let e = self.edges[idx];
        format!("{}>{}", self.nodes[e.tail].id, self.nodes[e.head].id)
    }

    pub fn edge_index(&self, tail: &str, head: &str) -> Result<usize> {
        let t = self.node_index(tail)?;
        let h = self.node_index(head)?;
        self.edge_lookup
            .get(&(t, h))
            .copied()
            .ok_or_else(|| Error::EdgeNotTransit {
                tail: tail.to_string(),
                head: head.to_string(),
            })
    }

    /// Parse `tail>head` into an edge index.
    pub fn edge_by_name(&self, name: &str) -> Result<usize> {
        let (tail, head) = name.split_once('>').ok_or_else(|| {
            Error::InvalidParams(format!("edge `{name}` is not of the form tail>head"))
        })?;
        self.edge_index(tail.trim(), head.trim())
    }

    pub fn pair_index(&self, edge: usize, flow: usize) -> Option<usize> {
        self.pair_lookup.get(&(edge, flow)).copied()
    }

    /// Pair indices of transit components entering node `i`, canonical order.
    pub fn inc_pair_indices(&self, node: usize) -> &[usize] {
        &self.inc_pairs[node]
    }

    pub fn out_pair_indices(&self, node: usize) -> &[usize] {
        &self.out_pairs[node]
    }

    pub fn inc_edge_indices(&self, node: usize) -> &[usize] {
        &self.inc_edges[node]
    }

    pub fn out_edge_indices(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// Flows fresh at `node` (their path starts there), canonical order.
    pub fn fresh_flow_indices(&self, node: usize) -> &[usize] {
        &self.fresh_flows[node]
    }

    /// Transit edges incident to node `id`, as `(tail, head)` id pairs.
    pub fn inc(&self, id: &str) -> Result<BTreeSet<(String, String)>> {
        let i = self.node_index(id)?;
        Ok(self.edge_name_set(&self.inc_edges[i]))
    }

    /// Transit edges leaving node `id`.
    pub fn out(&self, id: &str) -> Result<BTreeSet<(String, String)>> {
        let i = self.node_index(id)?;
        Ok(self.edge_name_set(&self.out_edges[i]))
    }

    fn edge_name_set(&self, edge_indices: &[usize]) -> BTreeSet<(String, String)> {
        edge_indices
            .iter()
            .map(|&ei| {
                let e = self.edges[ei];
                (self.nodes[e.tail].id.clone(), self.nodes[e.head].id.clone())
            })
            .collect()
    }

    /// Nodes crossed by at least one flow upstream of `ℓ` (tail included).
    pub fn pred(&self, tail: &str, head: &str) -> Result<BTreeSet<String>> {
        let ei = self.edge_index(tail, head)?;
        let mut set = BTreeSet::new();
        for p in self.pairs.iter().filter(|p| p.edge == ei) {
            for &u in &self.flows[p.flow].path[..=p.hop] {
                set.insert(self.nodes[u].id.clone());
            }
        }
        Ok(set)
    }

    /// Nodes crossed by flow `flow` upstream of the edge (tail included).
    pub fn pred_f(&self, tail: &str, head: &str, flow: &str) -> Result<BTreeSet<String>> {
        let ei = self.edge_index(tail, head)?;
        let fi = self.flow_index(flow)?;
        let pi = self
            .pair_index(ei, fi)
            .ok_or_else(|| Error::FlowNotOnEdge {
                flow: flow.to_string(),
                tail: tail.to_string(),
                head: head.to_string(),
            })?;
        let hop = self.pairs[pi].hop;
        Ok(self.flows[fi].path[..=hop]
            .iter()
            .map(|&u| self.nodes[u].id.clone())
            .collect())
    }

    /// Upstream node indices for a pair, in path order.
    pub fn pred_nodes_of_pair(&self, pair: usize) -> &[usize] {
        let p = self.pairs[pair];
        &self.flows[p.flow].path[..=p.hop]
    }

    /// The pair one hop earlier on the same flow (`None` when the flow is
    /// fresh at the pair's tail).
    pub fn prev_pair(&self, pair: usize) -> Option<usize> {
        self.prev_pair[pair]
    }

    /// Full path of flow `id` as node ids.
    pub fn flow_path(&self, id: &str) -> Result<Vec<String>> {
        let fi = self.flow_index(id)?;
        Ok(self.flows[fi]
            .path
            .iter()
            .map(|&u| self.nodes[u].id.clone())
            .collect())
    }

    /// Per-node utilization report; solvers refuse networks where any entry
    /// is unstable (utilization above 1).
    pub fn check_local_stability(&self) -> Vec<StabilityEntry> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let total: f64 = self
                    .flows
                    .iter()
                    .filter(|f| f.path.contains(&i))
                    .map(|f| f.rate_bps)
                    .sum();
                let utilization = total / n.rate_bps;
                StabilityEntry {
                    node: n.id.clone(),
                    utilization,
                    stable: utilization <= 1.0,
                }
            })
            .collect()
    }

    /// First unstable node, if any.
    pub fn instability(&self) -> Option<StabilityEntry> {
        self.check_local_stability()
            .into_iter()
            .find(|e| !e.stable)
    }

    /// True when the induced graph contains a directed cycle.
    pub fn has_cycle(&self) -> bool {
        // Kahn over all transit edges.
        let mut indeg = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            indeg[e.head] += 1;
        }
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = ready.pop() {
            seen += 1;
            for &ei in &self.out_edges[u] {
                let h = self.edges[ei].head;
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    ready.push(h);
                }
            }
        }
        seen != self.nodes.len()
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.tail, self.head)
    }
}
