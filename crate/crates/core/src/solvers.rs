//! The four fixed-point schemes over the global map, with one shared
//! termination policy, iteration traces and work counters.
//!
//! All four iterate from the zero state, produce componentwise nondecreasing
//! sequences, and — when they converge — stop at the same fixpoint:
//!
//! * [`run_sync`] applies the full map to the whole state at once;
//! * [`run_alt`] alternates a full delay update with a full burstiness update;
//! * [`run_async`] updates one scheduled subset of nodes per round,
//!   committing burstiness writes at the end of the round;
//! * [`run_fptfa`] iterates only on the burstinesses of a cut, recomputing
//!   everything else in one feedforward sweep per outer step.
//!
//! Termination: converged when one step changes no component by more than
//! `eps_abs + eps_rel·|value|` *and* the map's residual at the final state
//! meets the same bound; diverged when any burstiness exceeds
//! `divergence_cap` (the sequences are increasing, so a cap crossing is
//! final); iteration-limited otherwise.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{GlobalMap, State};
use crate::cuts::{feedforward_labeling, Cut, Labeling};
use crate::error::{Error, Result};
use crate::model::Network;

/// Termination policy. The underlying iterations have no natural stopping
/// rule of their own, so these knobs define one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub eps_rel: f64,
    pub eps_abs: f64,
    pub max_iters: usize,
    /// Bits; any burstiness component crossing this is treated as divergence.
    pub divergence_cap: f64,
    /// Record a state snapshot per iteration in [`SolverOutcome::trace`].
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps_rel: 1e-9,
            eps_abs: 1e-12,
            max_iters: 100_000,
            divergence_cap: 1e15,
            record_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rel > 0.0 && self.eps_abs > 0.0 && self.divergence_cap > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParams(
                "solve options must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which nodes each asynchronous round visits. Every schedule visits every
/// node at least once per epoch, so no node starves.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// One node per round, cycling in canonical id order.
    RoundRobin,
    /// One node per round; the visiting order is reshuffled every epoch.
    RandomPermutation { seed: u64 },
    /// Explicit rounds (sets of node ids), cycled forever.
    UserList { rounds: Vec<Vec<String>> },
}

impl Schedule {
    pub fn label(&self) -> String {
        match self {
            Schedule::RoundRobin => "rr".into(),
            Schedule::RandomPermutation { seed } => format!("random:{seed}"),
            Schedule::UserList { rounds } => format!("user:{}", rounds.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged,
    Diverged { cause: String },
    IterationLimit,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::Diverged { .. } => "Diverged",
            SolveStatus::IterationLimit => "IterationLimit",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, SolveStatus::Converged)
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, SolveStatus::Diverged { .. })
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub status: SolveStatus,
    /// Final state: the fixpoint when converged, the last iterate otherwise.
    pub state: State,
    /// Sync/alt: map applications; async: rounds; cut iteration: outer sweeps.
    pub iterations: usize,
    /// Total per-node delay evaluations performed by updates (the work
    /// metric; residual verification is not counted).
    pub node_updates: u64,
    pub trace: Option<Vec<State>>,
}

fn ensure_stable(net: &Network) -> Result<()> {
    if let Some(e) = net.instability() {
        return Err(Error::UnstableNetwork {
            node: e.node,
            utilization: e.utilization,
        });
    }
    Ok(())
}

fn diverged_component(net: &Network, state: &State, cap: f64, iteration: usize) -> Option<String> {
    state.z.iter().position(|&v| v > cap).map(|pi| {
        let p = net.pairs()[pi];
        format!(
            "z[{},{}] = {:.6e} exceeded divergence cap {:.1e} at iteration {}",
            net.edge_name(p.edge),
            net.flow_id(p.flow),
            state.z[pi],
            cap,
            iteration
        )
    })
}

struct TraceBuf(Option<Vec<State>>);

impl TraceBuf {
    fn new(net: &Network, on: bool) -> Self {
        let mut buf = TraceBuf(on.then(Vec::new));
        buf.push(&State::zero(net));
        buf
    }

    fn push(&mut self, state: &State) {
        if let Some(t) = self.0.as_mut() {
            t.push(state.clone());
        }
    }
}

/// Shared driver for the two full-vector schemes: apply `step` until the
/// change and the residual settle, the divergence cap is crossed, or the
/// iteration budget runs out.
fn run_full_vector(
    net: &Network,
    opts: &SolveOptions,
    step: impl Fn(&GlobalMap, &State) -> State,
) -> Result<SolverOutcome> {
    opts.validate()?;
    ensure_stable(net)?;
    let gm = GlobalMap::compile(net)?;
    let mut state = State::zero(net);
    let mut trace = TraceBuf::new(net, opts.record_trace);
    let mut node_updates = 0u64;
    for k in 1..=opts.max_iters {
        let next = step(&gm, &state);
        node_updates += net.node_count() as u64;
        debug_assert!(state.leq(&next), "iterates must be nondecreasing");
        trace.push(&next);
        if let Some(cause) = diverged_component(net, &next, opts.divergence_cap, k) {
            return Ok(SolverOutcome {
                status: SolveStatus::Diverged { cause },
                state: next,
                iterations: k,
                node_updates,
                trace: trace.0,
            });
        }
        let settled = state.close_to(&next, opts.eps_rel, opts.eps_abs)
            && gm.residual_within(&next, opts.eps_rel, opts.eps_abs)?;
        state = next;
        if settled {
            return Ok(SolverOutcome {
                status: SolveStatus::Converged,
                state,
                iterations: k,
                node_updates,
                trace: trace.0,
            });
        }
    }
    Ok(SolverOutcome {
        status: SolveStatus::IterationLimit,
        state,
        iterations: opts.max_iters,
        node_updates,
        trace: trace.0,
    })
}

/// Simultaneous update of every delay and every burstiness per iteration.
pub fn run_sync(net: &Network, opts: &SolveOptions) -> Result<SolverOutcome> {
    run_full_vector(net, opts, |gm, s| State {
        z: gm.eval_z(&s.d),
        d: gm.eval_d(&s.z),
    })
}

/// Alternating full-vector updates: all delays from the current
/// burstinesses, then all burstinesses from the fresh delays.
pub fn run_alt(net: &Network, opts: &SolveOptions) -> Result<SolverOutcome> {
    run_full_vector(net, opts, |gm, s| {
        let d = gm.eval_d(&s.z);
        let z = gm.eval_z(&d);
        State { z, d }
    })
}

/// Per-round node subsets: each visited node refreshes its delay, then the
/// burstinesses of its outgoing edges are recomputed from the current delays
/// and committed together at the end of the round.
pub fn run_async(net: &Network, schedule: &Schedule, opts: &SolveOptions) -> Result<SolverOutcome> {
    opts.validate()?;
    ensure_stable(net)?;
    let gm = GlobalMap::compile(net)?;
    let epoch_template = resolve_schedule(net, schedule)?;
    let mut rng = match schedule {
        Schedule::RandomPermutation { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };

    let mut state = State::zero(net);
    let mut trace = TraceBuf::new(net, opts.record_trace);
    let mut node_updates = 0u64;
    let mut iterations = 0usize;
    let mut pending: Vec<(usize, f64)> = Vec::new();

    while iterations < opts.max_iters {
        let epoch = match (&mut rng, schedule) {
            (Some(rng), Schedule::RandomPermutation { .. }) => {
                let mut order: Vec<usize> = (0..net.node_count()).collect();
                order.shuffle(rng);
                order.into_iter().map(|i| vec![i]).collect()
            }
            _ => epoch_template.clone(),
        };
        for round in &epoch {
            if iterations == opts.max_iters {
                break;
            }
            iterations += 1;
            pending.clear();
            for &i in round {
                state.d[i] = gm.node_delay(i, &state.z);
                node_updates += 1;
                for &pi in net.out_pair_indices(i) {
                    pending.push((pi, gm.pair_burstiness(pi, &state.d)));
                }
            }
            for &(pi, v) in &pending {
                state.z[pi] = v;
            }
            trace.push(&state);
            if let Some(cause) = diverged_component(net, &state, opts.divergence_cap, iterations) {
                return Ok(SolverOutcome {
                    status: SolveStatus::Diverged { cause },
                    state,
                    iterations,
                    node_updates,
                    trace: trace.0,
                });
            }
        }
        // Convergence is only decidable once every node has been revisited:
        // check the full residual at epoch boundaries.
        if gm.residual_within(&state, opts.eps_rel, opts.eps_abs)? {
            return Ok(SolverOutcome {
                status: SolveStatus::Converged,
                state,
                iterations,
                node_updates,
                trace: trace.0,
            });
        }
    }
    Ok(SolverOutcome {
        status: SolveStatus::IterationLimit,
        state,
        iterations,
        node_updates,
        trace: trace.0,
    })
}

/// Expand a schedule into one epoch of rounds (node indices) and check that
/// the epoch visits every node.
fn resolve_schedule(net: &Network, schedule: &Schedule) -> Result<Vec<Vec<usize>>> {
    let epoch: Vec<Vec<usize>> = match schedule {
        Schedule::RoundRobin | Schedule::RandomPermutation { .. } => {
            (0..net.node_count()).map(|i| vec![i]).collect()
        }
        Schedule::UserList { rounds } => rounds
            .iter()
            .map(|round| {
                let mut idx = round
                    .iter()
                    .map(|id| net.node_index(id))
                    .collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                idx.dedup();
                Ok(idx)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut visited = vec![false; net.node_count()];
    for round in &epoch {
        for &i in round {
            visited[i] = true;
        }
    }
    if let Some(i) = visited.iter().position(|v| !v) {
        return Err(Error::ScheduleViolatesHd(net.node_id(i).to_string()));
    }
    Ok(epoch)
}

/// One feedforward sweep of the cut iteration.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Next estimates for the cut components, in cut-pair order.
    pub z_cut_next: Vec<f64>,
    /// Full burstiness vector as used during the sweep: seeded values on the
    /// cut components, swept values elsewhere.
    pub z: Vec<f64>,
    pub d: Vec<f64>,
}

impl SweepResult {
    /// The state after committing the new cut estimates.
    pub fn committed(&self, cut_pairs: &[usize]) -> State {
        let mut z = self.z.clone();
        for (ci, &pi) in cut_pairs.iter().enumerate() {
            z[pi] = self.z_cut_next[ci];
        }
        State {
            z,
            d: self.d.clone(),
        }
    }
}

/// Pair indices whose edge belongs to the cut, canonical order.
pub fn cut_pair_indices(net: &Network, cut: &Cut) -> Vec<usize> {
    let mut sorted = cut.edges.clone();
    sorted.sort_unstable();
    (0..net.pair_count())
        .filter(|&pi| sorted.binary_search(&net.pairs()[pi].edge).is_ok())
        .collect()
}

/// Seed the cut burstinesses, then sweep the nodes in labeling order:
/// refresh each node's delay from the current burstinesses and propagate
/// incrementally, writing non-cut edges in place and cut edges into the
/// next-estimate vector.
pub fn fptfa_iter(
    net: &Network,
    cut: &Cut,
    labeling: &Labeling,
    z_cut: &[f64],
) -> Result<SweepResult> {
    let gm = GlobalMap::compile(net)?;
    let cut_pairs = cut_pair_indices(net, cut);
    fptfa_sweep(&gm, &cut_pairs, labeling, z_cut)
}

fn fptfa_sweep(
    gm: &GlobalMap,
    cut_pairs: &[usize],
    labeling: &Labeling,
    z_cut: &[f64],
) -> Result<SweepResult> {
    let net = gm.network();
    if z_cut.len() != cut_pairs.len() {
        return Err(Error::IndexMismatch {
            context: "cut seed must cover exactly the cut's (edge, flow) pairs",
            expected: cut_pairs.len(),
            got: z_cut.len(),
        });
    }
    let mut cut_pos = vec![None; net.pair_count()];
    for (ci, &pi) in cut_pairs.iter().enumerate() {
        cut_pos[pi] = Some(ci);
    }
    let mut z = vec![0.0; net.pair_count()];
    for (ci, &pi) in cut_pairs.iter().enumerate() {
        z[pi] = z_cut[ci];
    }
    let mut d = vec![0.0; net.node_count()];
    let mut z_cut_next = vec![0.0; cut_pairs.len()];
    for &i in &labeling.order {
        d[i] = gm.node_delay(i, &z);
        for (pi, v) in gm.out_updates(i, d[i], &z) {
            match cut_pos[pi] {
                Some(ci) => z_cut_next[ci] = v,
                None => z[pi] = v,
            }
        }
    }
    Ok(SweepResult { z_cut_next, z, d })
}

/// Outer fixed-point iteration on the cut burstinesses, from zero.
/// Convergence is measured on the cut components; the reported state is the
/// one assembled from the final sweep.
pub fn run_fptfa(net: &Network, cut: &Cut, opts: &SolveOptions) -> Result<SolverOutcome> {
    opts.validate()?;
    ensure_stable(net)?;
    let gm = GlobalMap::compile(net)?;
    let labeling = feedforward_labeling(net, cut)?;
    let cut_pairs = cut_pair_indices(net, cut);
    let mut z_cut = vec![0.0; cut_pairs.len()];
    let mut trace = TraceBuf::new(net, opts.record_trace);
    let mut node_updates = 0u64;
    let mut last_state = State::zero(net);
    for k in 1..=opts.max_iters {
        let sweep = fptfa_sweep(&gm, &cut_pairs, &labeling, &z_cut)?;
        node_updates += net.node_count() as u64;
        let state = sweep.committed(&cut_pairs);
        trace.push(&state);
        if let Some(cause) = diverged_component(net, &state, opts.divergence_cap, k) {
            return Ok(SolverOutcome {
                status: SolveStatus::Diverged { cause },
                state,
                iterations: k,
                node_updates,
                trace: trace.0,
            });
        }
        let cut_settled = z_cut
            .iter()
            .zip(&sweep.z_cut_next)
            .all(|(&a, &b)| (b - a).abs() <= opts.eps_abs + opts.eps_rel * a.abs());
        if cut_settled && gm.residual_within(&state, opts.eps_rel, opts.eps_abs)? {
            return Ok(SolverOutcome {
                status: SolveStatus::Converged,
                state,
                iterations: k,
                node_updates,
                trace: trace.0,
            });
        }
        z_cut = sweep.z_cut_next;
        last_state = state;
    }
    Ok(SolverOutcome {
        status: SolveStatus::IterationLimit,
        state: last_state,
        iterations: opts.max_iters,
        node_updates,
        trace: trace.0,
    })
}

/// End-to-end delay bound per flow: the sum of node delay bounds along the
/// flow's path, in canonical flow order.
pub fn end_to_end_bounds(net: &Network, state: &State) -> Vec<(String, f64)> {
    net.flows()
        .iter()
        .map(|f| (f.id.clone(), f.path.iter().map(|&u| state.d[u]).sum()))
        .collect()
}

/// One labelled solver execution inside a comparison.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub node_updates: u64,
    /// Per-flow end-to-end bounds (canonical flow order); only meaningful
    /// when the run converged.
    pub end_to_end: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub runs: Vec<RunSummary>,
    /// Largest relative end-to-end difference between any two converged
    /// runs on the same flow (0 when fewer than two runs converged).
    pub max_pairwise_rel_diff: f64,
    /// True when every run reported the same status kind.
    pub verdict_unanimous: bool,
}

/// Run all four schemes — the cut iteration once per supplied cut, the
/// asynchronous scheme once per supplied schedule — and compare bounds.
pub fn compare_algorithms(
    net: &Network,
    opts: &SolveOptions,
    cuts: &[Cut],
    schedules: &[Schedule],
) -> Result<ComparisonReport> {
    let mut runs = Vec::new();
    let summarize = |label: String, outcome: SolverOutcome| RunSummary {
        label,
        end_to_end: end_to_end_bounds(net, &outcome.state),
        status: outcome.status,
        iterations: outcome.iterations,
        node_updates: outcome.node_updates,
    };
    runs.push(summarize("sync".into(), run_sync(net, opts)?));
    runs.push(summarize("alt".into(), run_alt(net, opts)?));
    for schedule in schedules {
        runs.push(summarize(
            format!("async[{}]", schedule.label()),
            run_async(net, schedule, opts)?,
        ));
    }
    for cut in cuts {
        runs.push(summarize(
            format!("fptfa[{}]", cut.edge_names(net).join("+")),
            run_fptfa(net, cut, opts)?,
        ));
    }

    let converged: Vec<&RunSummary> = runs.iter().filter(|r| r.status.is_converged()).collect();
    let mut max_diff = 0.0f64;
    for (a, b) in converged
        .iter()
        .enumerate()
        .flat_map(|(i, a)| converged[i + 1..].iter().map(move |b| (*a, *b)))
    {
        for ((_, va), (_, vb)) in a.end_to_end.iter().zip(&b.end_to_end) {
            let scale = va.abs().max(vb.abs());
            if scale > 0.0 {
                max_diff = max_diff.max((va - vb).abs() / scale);
            }
        }
    }
    let verdict_unanimous = runs
        .windows(2)
        .all(|w| w[0].status.name() == w[1].status.name());
    Ok(ComparisonReport {
        runs,
        max_pairwise_rel_diff: max_diff,
        verdict_unanimous,
    })
}

/// Export a recorded trace as CSV with columns
/// `iteration,kind,id,flow,value`; rows are emitted in iteration order,
/// delays before burstinesses, each block in canonical order.
pub fn write_trace_csv<W: Write>(net: &Network, trace: &[State], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "kind", "id", "flow", "value"])?;
    for (k, state) in trace.iter().enumerate() {
        for (i, v) in state.d.iter().enumerate() {
            w.write_record([
                k.to_string(),
                "d".into(),
                net.node_id(i).to_string(),
                String::new(),
                format!("{v}"),
            ])?;
        }
        for (pi, v) in state.z.iter().enumerate() {
            let p = net.pairs()[pi];
            w.write_record([
                k.to_string(),
                "z".into(),
                net.edge_name(p.edge),
                net.flow_id(p.flow).to_string(),
                format!("{v}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::{find_cut, CutStrategy};
    use crate::gen;
    use crate::model::build_network;

    fn rel_eq(a: f64, b: f64, eps: f64) {
        assert!(
            (a - b).abs() <= eps * b.abs().max(1e-300),
            "{a} != {b} within {eps}"
        );
    }

    fn tight() -> SolveOptions {
        SolveOptions {
            eps_rel: 1e-12,
            eps_abs: 1e-15,
            ..SolveOptions::default()
        }
    }

    #[test]
    fn sync_solves_the_tandem() {
        let net = build_network(&gen::tandem()).unwrap();
        let out = run_sync(&net, &SolveOptions::default()).unwrap();
        assert!(out.status.is_converged());
        let a = net.node_index("A").unwrap();
        let b = net.node_index("B").unwrap();
        rel_eq(out.state.d[a], 0.0011, 1e-12);
        rel_eq(out.state.d[b], 0.00121, 1e-12);
        rel_eq(out.state.z[0], 2100.0, 1e-12);
    }

    #[test]
    fn alt_matches_sync_on_the_tandem_quickly() {
        let net = build_network(&gen::tandem()).unwrap();
        let out = run_alt(&net, &SolveOptions::default()).unwrap();
        assert!(out.status.is_converged());
        assert!(out.iterations <= 3);
        rel_eq(out.state.d[1], 0.00121, 1e-12);
    }

    #[test]
    fn async_all_nodes_schedule_matches_alt_limit() {
        let net = build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
        let all = Schedule::UserList {
            rounds: vec![net.nodes().iter().map(|n| n.id.clone()).collect()],
        };
        let a = run_async(&net, &all, &tight()).unwrap();
        let b = run_alt(&net, &tight()).unwrap();
        assert!(a.status.is_converged() && b.status.is_converged());
        for (x, y) in a.state.d.iter().zip(&b.state.d) {
            rel_eq(*x, *y, 1e-9);
        }
    }

    #[test]
    fn solvers_refuse_unstable_networks() {
        let mut spec = gen::tandem();
        spec.flows[0].rate_bps = 1.1e7;
        let net = build_network(&spec).unwrap();
        assert!(matches!(
            run_sync(&net, &SolveOptions::default()),
            Err(Error::UnstableNetwork { .. })
        ));
        assert!(matches!(
            run_alt(&net, &SolveOptions::default()),
            Err(Error::UnstableNetwork { .. })
        ));
    }

    #[test]
    fn schedule_must_visit_every_node() {
        let net = build_network(&gen::ring(3, gen::RingParams::default())).unwrap();
        let bad = Schedule::UserList {
            rounds: vec![vec!["N1".into()], vec!["N2".into()]],
        };
        assert!(matches!(
            run_async(&net, &bad, &SolveOptions::default()),
            Err(Error::ScheduleViolatesHd(_))
        ));
        let unknown = Schedule::UserList {
            rounds: vec![vec!["N1".into(), "NX".into()]],
        };
        assert!(matches!(
            run_async(&net, &unknown, &SolveOptions::default()),
            Err(Error::NoSuchNode(_))
        ));
    }

    #[test]
    fn fptfa_converges_in_one_outer_iteration_on_acyclic_networks() {
        let net = build_network(&gen::tandem()).unwrap();
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        assert!(cut.edges.is_empty());
        let out = run_fptfa(&net, &cut, &SolveOptions::default()).unwrap();
        assert!(out.status.is_converged());
        assert_eq!(out.iterations, 1);
        rel_eq(out.state.d[1], 0.00121, 1e-12);
    }

    #[test]
    fn fptfa_first_sweep_of_a_small_ring_matches_the_hand_unrolled_value() {
        // Ring of three, cut {(N3,N1)}, zero seed: unroll
        // d1 = T + b/R, z12 = b + r d1, d2 = T + (b + z12)/R,
        // z23 = b + r d2, d3 = T + (b + z23)/R, z'31 = b + r d3.
        let net = build_network(&gen::ring(3, gen::RingParams::default())).unwrap();
        let cut = find_cut(&net, CutStrategy::User, &["N3>N1".to_string()]).unwrap();
        let labeling = feedforward_labeling(&net, &cut).unwrap();
        let sweep = fptfa_iter(&net, &cut, &labeling, &[0.0]).unwrap();
        let (t, rr, r, b) = (0.001, 1e7, 0.7e7 / 3.0, 1000.0);
        let d1 = t + b / rr;
        let z12 = b + r * d1;
        let d2 = t + (b + z12) / rr;
        let z23 = b + r * d2;
        let d3 = t + (b + z23) / rr;
        let expect = b + r * d3;
        rel_eq(sweep.z_cut_next[0], expect, 1e-15);
        rel_eq(expect, 4593.074074074075, 1e-12);
    }

    #[test]
    fn fptfa_closes_on_the_oracle_fixpoint() {
        let net = build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        let labeling = feedforward_labeling(&net, &cut).unwrap();
        let sys = crate::oracle::linearize(&net).unwrap();
        let sol = match crate::oracle::exact_fixpoint(&sys).unwrap() {
            crate::oracle::OracleOutcome::Fixpoint(s) => s,
            other => panic!("expected a fixpoint, got {other:?}"),
        };
        let cut_pairs = cut_pair_indices(&net, &cut);
        let seed: Vec<f64> = cut_pairs.iter().map(|&pi| sol.state.z[pi]).collect();
        let sweep = fptfa_iter(&net, &cut, &labeling, &seed).unwrap();
        for (ci, &pi) in cut_pairs.iter().enumerate() {
            rel_eq(sweep.z_cut_next[ci], sol.state.z[pi], 1e-9);
        }
    }

    #[test]
    fn divergence_is_unanimous_on_an_overloaded_ring() {
        // util = 0.96 < 1 at every node, yet the propagation loop gain
        // exceeds 1: every scheme must walk off to the cap.
        let params = gen::RingParams {
            flow_rate_bps: Some(1.2 * 1e7 / 5.0),
            ..gen::RingParams::default()
        };
        let net = build_network(&gen::ring(5, params)).unwrap();
        assert!(net.instability().is_none());
        let opts = SolveOptions::default();
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        assert!(run_sync(&net, &opts).unwrap().status.is_diverged());
        assert!(run_alt(&net, &opts).unwrap().status.is_diverged());
        assert!(run_async(&net, &Schedule::RoundRobin, &opts)
            .unwrap()
            .status
            .is_diverged());
        assert!(run_fptfa(&net, &cut, &opts).unwrap().status.is_diverged());
    }

    #[test]
    fn ring5_all_schemes_agree_with_each_other() {
        let net = build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
        let cuts = vec![
            find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap(),
            find_cut(&net, CutStrategy::User, &["N2>N3".to_string()]).unwrap(),
        ];
        let schedules = vec![
            Schedule::RoundRobin,
            Schedule::RandomPermutation { seed: 7 },
        ];
        let report = compare_algorithms(&net, &tight(), &cuts, &schedules).unwrap();
        assert!(report.verdict_unanimous);
        assert!(report.runs.iter().all(|r| r.status.is_converged()));
        assert!(report.max_pairwise_rel_diff <= 1e-9, "{}", report.max_pairwise_rel_diff);
        // By symmetry every flow's bound equals 4·d̄ = 0.035 s.
        for run in &report.runs {
            for (_, v) in &run.end_to_end {
                rel_eq(*v, 0.035, 1e-9);
            }
        }
    }

    #[test]
    fn schemes_agree_on_a_capped_delay_model() {
        // A constant extra form caps one node's delay; the map is then a
        // genuine minimum of affines (no oracle), and all schemes must
        // still meet at the same fixpoint.
        let mut spec = gen::ring(3, gen::RingParams::default());
        spec.nodes[0].extra_delay_bounds = vec![crate::model::ExtraDelayBoundSpec {
            constant_s: 0.0008,
            coefficients: vec![],
        }];
        let net = build_network(&spec).unwrap();
        assert!(matches!(
            crate::oracle::linearize(&net),
            Err(Error::NotAffine(_))
        ));
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        let outs = [
            run_sync(&net, &tight()).unwrap(),
            run_alt(&net, &tight()).unwrap(),
            run_async(&net, &Schedule::RoundRobin, &tight()).unwrap(),
            run_fptfa(&net, &cut, &tight()).unwrap(),
        ];
        let n1 = net.node_index("N1").unwrap();
        for out in &outs {
            assert!(out.status.is_converged());
            assert!(out.state.d[n1] <= 0.0008);
            for (a, b) in out.state.d.iter().zip(&outs[0].state.d) {
                rel_eq(*a, *b, 1e-9);
            }
        }
    }

    #[test]
    fn sweep_rejects_a_wrong_arity_seed() {
        let net = build_network(&gen::ring(3, gen::RingParams::default())).unwrap();
        let cut = find_cut(&net, CutStrategy::DfsBackEdges, &[]).unwrap();
        let labeling = feedforward_labeling(&net, &cut).unwrap();
        assert!(matches!(
            fptfa_iter(&net, &cut, &labeling, &[0.0, 0.0]),
            Err(Error::IndexMismatch { .. })
        ));
    }

    #[test]
    fn documented_cuts_agree_on_the_cyclic_example() {
        let net = build_network(&gen::cyclic_example()).unwrap();
        let cuts = vec![
            find_cut(&net, CutStrategy::User, &["O1>O6".into(), "O10>O5".into()]).unwrap(),
            find_cut(&net, CutStrategy::User, &["O1>O6".into(), "O4>O12".into()]).unwrap(),
        ];
        let report =
            compare_algorithms(&net, &tight(), &cuts, &[Schedule::RoundRobin]).unwrap();
        assert!(report.runs.iter().all(|r| r.status.is_converged()));
        assert!(report.max_pairwise_rel_diff <= 1e-9);
    }

    #[test]
    fn random_schedules_converge_to_the_same_limit() {
        let net = build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
        let reference = run_sync(&net, &tight()).unwrap();
        for seed in 0..10u64 {
            let out = run_async(&net, &Schedule::RandomPermutation { seed }, &tight()).unwrap();
            assert!(out.status.is_converged());
            for (x, y) in out.state.d.iter().zip(&reference.state.d) {
                rel_eq(*x, *y, 1e-9);
            }
        }
    }

    #[test]
    fn trace_is_recorded_and_monotone() {
        let net = build_network(&gen::ring(5, gen::RingParams::default())).unwrap();
        let out = run_sync(&net, &SolveOptions::default().with_trace()).unwrap();
        let trace = out.trace.as_ref().unwrap();
        assert_eq!(trace.len(), out.iterations + 1);
        for w in trace.windows(2) {
            assert!(w[0].leq(&w[1]));
        }
        let mut buf = Vec::new();
        write_trace_csv(&net, trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,kind,id,flow,value\n"));
        assert!(text.lines().count() > trace.len());
    }
}
