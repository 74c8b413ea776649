//! The per-node delay-jitter map, the per-edge burstiness map, and their
//! combination into one global state-to-state map.
//!
//! For a node `i` fed by transit burstinesses `z` the delay bound is the
//! minimum of affine forms with non-negative coefficients; the default form
//! is `T + P + (fresh bursts + incoming transit bursts) / R`, the horizontal
//! deviation of the aggregate leaky bucket against the rate-latency service.
//! For an edge `ℓ` and flow `f` the propagated burstiness is
//! `b_f + r_f * (sum of delay bounds upstream of ℓ on f's path)`.
//!
//! Both maps are isotone; the burstiness map is affine and the delay map is
//! concave (a minimum of affines), which is what the fixed-point theory of
//! the solvers and the oracle relies on. Evaluations are pure and sum in the
//! canonical index order, so results are bit-reproducible.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Network;

/// One affine delay form: `constant + Σ coeff · z[pair]`, coefficients
/// keyed by position in the owning node's incoming-pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant_s: f64,
    /// `(position in inc-pair list, seconds per bit)`, all coefficients ≥ 0.
    pub coefficients: Vec<(usize, f64)>,
}

impl AffineForm {
    fn eval(&self, z_inc: &[f64]) -> f64 {
        let mut acc = self.constant_s;
        for &(k, c) in &self.coefficients {
            acc += c * z_inc[k];
        }
        acc
    }
}

/// Delay model of one node: the pointwise minimum of one or more forms.
/// Evaluates strictly positive at zero load.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    pub node: usize,
    pub forms: Vec<AffineForm>,
}

impl DelayModel {
    /// Evaluate on the restriction of `z` to the node's incoming pairs,
    /// ordered canonically. Rejects a wrong-arity argument.
    pub fn eval(&self, z_inc: &[f64], arity: usize) -> Result<f64> {
        if z_inc.len() != arity {
            return Err(Error::IndexMismatch {
                context: "delay model argument must cover exactly inc(i)",
                expected: arity,
                got: z_inc.len(),
            });
        }
        Ok(self.eval_unchecked(z_inc))
    }

    fn eval_unchecked(&self, z_inc: &[f64]) -> f64 {
        self.forms
            .iter()
            .map(|f| f.eval(z_inc))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_affine(&self) -> bool {
        self.forms.len() == 1
    }
}

/// Build the delay model of one node: the default rate-latency form plus any
/// extra forms declared on the node.
pub fn default_delay_model(net: &Network, node: usize) -> Result<DelayModel> {
    let n = &net.nodes()[node];
    let mut fresh_bursts = 0.0;
    for &fi in net.fresh_flow_indices(node) {
        fresh_bursts += net.flows()[fi].burst_bits;
    }
    let base = AffineForm {
        constant_s: n.latency_s + n.packetization_s + fresh_bursts / n.rate_bps,
        coefficients: (0..net.inc_pair_indices(node).len())
            .map(|k| (k, 1.0 / n.rate_bps))
            .collect(),
    };
    let mut forms = vec![base];
    let inc = net.inc_pair_indices(node);
    for extra in &n.extra_delay_bounds {
        let mut coefficients = Vec::with_capacity(extra.coefficients.len());
        for c in &extra.coefficients {
            let ei = net.edge_by_name(&c.edge)?;
            let fi = net.flow_index(&c.flow)?;
            let pi = net.pair_index(ei, fi).ok_or_else(|| Error::FlowNotOnEdge {
                flow: c.flow.clone(),
                tail: c.edge.split('>').next().unwrap_or_default().to_string(),
                head: c.edge.split('>').nth(1).unwrap_or_default().to_string(),
            })?;
            let pos = inc.iter().position(|&p| p == pi).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "extra delay bound of `{}` references pair ({}, {}) not incident to it",
                    n.id, c.edge, c.flow
                ))
            })?;
            coefficients.push((pos, c.seconds_per_bit));
        }
        forms.push(AffineForm {
            constant_s: extra.constant_s,
            coefficients,
        });
    }
    let floor = forms
        .iter()
        .map(|f| f.constant_s)
        .fold(f64::INFINITY, f64::min);
    if floor <= 0.0 {
        return Err(Error::ZeroJitterFloor(n.id.clone()));
    }
    Ok(DelayModel { node, forms })
}

/// One point of the iteration space: per-pair burstiness bounds (bits) and
/// per-node delay-jitter bounds (seconds), both in canonical order and
/// ordered componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub z: Vec<f64>,
    pub d: Vec<f64>,
}

impl State {
    pub fn zero(net: &Network) -> State {
        State {
            z: vec![0.0; net.pair_count()],
            d: vec![0.0; net.node_count()],
        }
    }

    pub fn leq(&self, other: &State) -> bool {
        self.z.iter().zip(&other.z).all(|(a, b)| a <= b)
            && self.d.iter().zip(&other.d).all(|(a, b)| a <= b)
    }

    /// Componentwise `x ≤ y + (eps_abs + eps_rel·|y|)`.
    pub fn leq_within(&self, other: &State, eps_rel: f64, eps_abs: f64) -> bool {
        let ok = |a: f64, b: f64| a <= b + eps_abs + eps_rel * b.abs();
        self.z.iter().zip(&other.z).all(|(&a, &b)| ok(a, b))
            && self.d.iter().zip(&other.d).all(|(&a, &b)| ok(a, b))
    }

    /// True when every component of `next` is within the mixed tolerance of
    /// the corresponding component of `self`.
    pub fn close_to(&self, next: &State, eps_rel: f64, eps_abs: f64) -> bool {
        let ok = |a: f64, b: f64| (b - a).abs() <= eps_abs + eps_rel * a.abs();
        self.z.iter().zip(&next.z).all(|(&a, &b)| ok(a, b))
            && self.d.iter().zip(&next.d).all(|(&a, &b)| ok(a, b))
    }

    pub fn max_component(&self) -> f64 {
        self.z
            .iter()
            .chain(self.d.iter())
            .fold(0.0f64, |m, &v| m.max(v))
    }
}

/// The compiled global map: per-node delay models plus the per-pair
/// burstiness rules, evaluated against full canonical state vectors.
#[derive(Debug, Clone)]
pub struct GlobalMap<'a> {
    net: &'a Network,
    models: Vec<DelayModel>,
}

impl<'a> GlobalMap<'a> {
    pub fn compile(net: &'a Network) -> Result<GlobalMap<'a>> {
        let models = (0..net.node_count())
            .map(|i| default_delay_model(net, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(GlobalMap { net, models })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn models(&self) -> &[DelayModel] {
        &self.models
    }

    /// True when every node's delay model is a single affine form.
    pub fn is_affine(&self) -> bool {
        self.models.iter().all(|m| m.is_affine())
    }

    /// Delay bound of one node from the full burstiness vector.
    pub fn node_delay(&self, node: usize, z: &[f64]) -> f64 {
        let inc = self.net.inc_pair_indices(node);
        self.models[node]
            .forms
            .iter()
            .map(|form| {
                let mut acc = form.constant_s;
                for &(k, c) in &form.coefficients {
                    acc += c * z[inc[k]];
                }
                acc
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Burstiness bound of one pair from the full delay vector.
    pub fn pair_burstiness(&self, pair: usize, d: &[f64]) -> f64 {
        let p = self.net.pairs()[pair];
        let flow = &self.net.flows()[p.flow];
        let mut acc = 0.0;
        for &u in self.net.pred_nodes_of_pair(pair) {
            acc += d[u];
        }
        flow.burst_bits + flow.rate_bps * acc
    }

    /// Full delay map: `d_i = D_i(z_inc(i))` for every node.
    pub fn eval_d(&self, z: &[f64]) -> Vec<f64> {
        (0..self.net.node_count())
            .map(|i| self.node_delay(i, z))
            .collect()
    }

    /// Full burstiness map: `z_ℓf = Z_ℓf(d_pred)` for every pair.
    pub fn eval_z(&self, d: &[f64]) -> Vec<f64> {
        (0..self.net.pair_count())
            .map(|pi| self.pair_burstiness(pi, d))
            .collect()
    }

    /// The combined map `(z, d) -> (Z(d), D(z))`.
    pub fn eval(&self, state: &State) -> Result<State> {
        if state.z.len() != self.net.pair_count() || state.d.len() != self.net.node_count() {
            return Err(Error::IndexMismatch {
                context: "state must cover the full canonical index",
                expected: self.net.pair_count() + self.net.node_count(),
                got: state.z.len() + state.d.len(),
            });
        }
        Ok(State {
            z: self.eval_z(&state.d),
            d: self.eval_d(&state.z),
        })
    }

    /// Incremental propagation through one node: given the node's delay and
    /// the incoming burstinesses (full z vector), the burstiness of every
    /// outgoing pair. Transit flows continue from their in-edge value, fresh
    /// flows start from their source burst.
    pub fn out_updates(&self, node: usize, d_node: f64, z: &[f64]) -> Vec<(usize, f64)> {
        self.net
            .out_pair_indices(node)
            .iter()
            .map(|&pi| {
                let p = self.net.pairs()[pi];
                let flow = &self.net.flows()[p.flow];
                let value = match self.net.prev_pair(pi) {
                    None => flow.burst_bits + flow.rate_bps * d_node,
                    Some(prev) => z[prev] + flow.rate_bps * d_node,
                };
                (pi, value)
            })
            .collect()
    }

    /// Componentwise residual of the map at `state`: `eval(state) - state`
    /// must be within the mixed tolerance for a state to count as a fixpoint.
    pub fn residual_within(&self, state: &State, eps_rel: f64, eps_abs: f64) -> Result<bool> {
        let image = self.eval(state)?;
        Ok(state.close_to(&image, eps_rel, eps_abs))
    }

    /// Membership in the lower set of the map: `state ≤ eval(state)`.
    pub fn below_image(&self, state: &State) -> Result<bool> {
        let image = self.eval(state)?;
        Ok(state.leq(&image))
    }

    /// End-to-end delay bound of a flow: sum of node delay bounds along its
    /// path, in path order.
    pub fn end_to_end(&self, flow: usize, d: &[f64]) -> f64 {
        self.net.flows()[flow].path.iter().map(|&u| d[u]).sum()
    }
}

/// Delay bound of node `id` for explicitly given incoming burstinesses,
/// keyed by (`tail>head`, flow id). The map must cover exactly `inc(i)`.
pub fn eval_delay(net: &Network, id: &str, z_inc: &BTreeMap<(String, String), f64>) -> Result<f64> {
    let node = net.node_index(id)?;
    let model = default_delay_model(net, node)?;
    let inc = net.inc_pair_indices(node);
    if z_inc.len() != inc.len() {
        return Err(Error::IndexMismatch {
            context: "delay model argument must cover exactly inc(i)",
            expected: inc.len(),
            got: z_inc.len(),
        });
    }
    let mut gathered = Vec::with_capacity(inc.len());
    for &pi in inc {
        let p = net.pairs()[pi];
        let key = (net.edge_name(p.edge), net.flow_id(p.flow).to_string());
        let v = z_inc.get(&key).ok_or(Error::IndexMismatch {
            context: "delay model argument must cover exactly inc(i)",
            expected: inc.len(),
            got: z_inc.len(),
        })?;
        gathered.push(*v);
    }
    model.eval(&gathered, inc.len())
}

/// Incremental burstiness update through node `id`: burstiness of every
/// outgoing (edge, flow) component from the node's delay `d_node` and the
/// incoming burstinesses, keyed by (`tail>head`, flow id).
pub fn eval_zfp(
    net: &Network,
    id: &str,
    d_node: f64,
    z_inc: &BTreeMap<(String, String), f64>,
) -> Result<BTreeMap<(String, String), f64>> {
    let node = net.node_index(id)?;
    let mut out = BTreeMap::new();
    for &pi in net.out_pair_indices(node) {
        let p = net.pairs()[pi];
        let flow = &net.flows()[p.flow];
        let value = match net.prev_pair(pi) {
            None => flow.burst_bits + flow.rate_bps * d_node,
            Some(prev) => {
                let q = net.pairs()[prev];
                let key = (net.edge_name(q.edge), flow.id.clone());
                let zin = z_inc.get(&key).ok_or_else(|| Error::MissingInEdge {
                    flow: flow.id.clone(),
                    node: id.to_string(),
                })?;
                zin + flow.rate_bps * d_node
            }
        };
        out.insert((net.edge_name(p.edge), flow.id.clone()), value);
    }
    Ok(out)
}

/// Burstiness bound of `flow` on the edge `tail>head` for explicitly given
/// upstream delays. Every node upstream of the edge must be covered.
pub fn eval_burstiness(
    net: &Network,
    tail: &str,
    head: &str,
    flow: &str,
    delays: &BTreeMap<String, f64>,
) -> Result<f64> {
    let ei = net.edge_index(tail, head)?;
    let fi = net.flow_index(flow)?;
    let pi = net.pair_index(ei, fi).ok_or_else(|| Error::FlowNotOnEdge {
        flow: flow.to_string(),
        tail: tail.to_string(),
        head: head.to_string(),
    })?;
    let f = &net.flows()[fi];
    let mut acc = 0.0;
    for &u in net.pred_nodes_of_pair(pi) {
        let id = net.node_id(u);
        acc += delays
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingDelay(id.to_string()))?;
    }
    Ok(f.burst_bits + f.rate_bps * acc)
}
