//! `tfa` — worst-case delay-jitter and burstiness bounds for per-class FIFO
//! networks, from the command line.
//!
//! Subcommands: `validate` a network file, `gen-ring` a benchmark topology,
//! `analyze` one network with one or more iteration schemes, `compare`
//! schemes across ring sizes, and `oracle` for the exact affine fixpoint.
//!
//! Exit codes: 0 when every requested solve converged (or the command has
//! no solver), 2 when any solve diverged (or the oracle certifies that no
//! fixpoint exists), 3 when any solve hit the iteration limit, 1 on errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tfa_core::cuts::{find_cut, Cut, CutStrategy};
use tfa_core::gen::{self, RingParams};
use tfa_core::model::{build_network, Network, NetworkSpec};
use tfa_core::oracle::{exact_fixpoint, linearize, OracleOutcome};
use tfa_core::report;
use tfa_core::solvers::{
    run_alt, run_async, run_fptfa, run_sync, Schedule, SolveOptions, SolveStatus, SolverOutcome,
};

#[derive(Parser)]
#[command(name = "tfa", version, about = "Worst-case analysis of per-class FIFO networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a network file and report sizes, cycles and local stability.
    Validate { file: PathBuf },
    /// Generate a ring benchmark network description.
    GenRing(GenRingArgs),
    /// Compute bounds on one network with the selected schemes.
    Analyze(AnalyzeArgs),
    /// Compare schemes (bounds and work counts) across networks.
    Compare(CompareArgs),
    /// Exact fixpoint, spectral radius and residual of the affine system.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenRingArgs {
    /// Number of servers (>= 2).
    #[arg(long)]
    n: usize,
    /// Server latency in seconds.
    #[arg(long, default_value_t = 0.001)]
    latency: f64,
    /// Server rate in bits per second.
    #[arg(long, default_value_t = 1e7)]
    rate: f64,
    /// Per-flow rate in bits per second (default 0.7·rate/n).
    #[arg(long)]
    flow_rate: Option<f64>,
    /// Per-flow burstiness in bits.
    #[arg(long, default_value_t = 1000.0)]
    burst: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Sync,
    Async,
    Alt,
    Fptfa,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CutStrategyArg {
    Dfs,
    Min,
    User,
}

#[derive(Args)]
struct SolveArgs {
    /// Relative convergence tolerance.
    #[arg(long, default_value_t = 1e-9)]
    eps_rel: f64,
    /// Absolute convergence tolerance.
    #[arg(long, default_value_t = 1e-12)]
    eps_abs: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Burstiness cap (bits) treated as divergence.
    #[arg(long, default_value_t = 1e15)]
    divergence_cap: f64,
}

impl SolveArgs {
    fn to_options(&self, record_trace: bool) -> SolveOptions {
        SolveOptions {
            eps_rel: self.eps_rel,
            eps_abs: self.eps_abs,
            max_iters: self.max_iters,
            divergence_cap: self.divergence_cap,
            record_trace,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Network description file.
    #[arg(long, group = "source", required = true)]
    input: Option<PathBuf>,
    /// Generate a default-parameter ring of this size instead of reading a file.
    #[arg(long, group = "source")]
    ring: Option<usize>,
    #[arg(long, value_enum, default_value = "sync")]
    algo: Algo,
    /// Cut edges for the cut iteration, as `tail>head,tail>head,...`.
    #[arg(long)]
    cut: Option<String>,
    #[arg(long, value_enum, default_value = "dfs")]
    cut_strategy: CutStrategyArg,
    /// Asynchronous schedule: `rr`, `random:<seed>` or `user:<rounds>`
    /// (rounds separated by `;`, node ids inside a round by `,`).
    #[arg(long, default_value = "rr")]
    schedule: String,
    #[command(flatten)]
    solve: SolveArgs,
    /// Write per-iteration state snapshots here (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Results CSV path (stdout when omitted; required with --algo all).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Network description file.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Generate default-parameter rings of these sizes (comma separated).
    #[arg(long, group = "source", default_value = "5,10,15,20,25")]
    ring_sizes: String,
    /// Cut specs for the cut iteration; repeatable.
    #[arg(long)]
    cut: Vec<String>,
    #[arg(long, value_enum, default_value = "dfs")]
    cut_strategy: CutStrategyArg,
    /// Asynchronous schedules; repeatable.
    #[arg(long, default_values_t = [String::from("rr")])]
    schedule: Vec<String>,
    #[command(flatten)]
    solve: SolveArgs,
    /// Comparison table CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bound-versus-iteration plot data CSV.
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, group = "source", required = true)]
    input: Option<PathBuf>,
    #[arg(long, group = "source")]
    ring: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::GenRing(args) => cmd_gen_ring(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    }
}

fn load_network(input: Option<&Path>, ring: Option<usize>) -> anyhow::Result<Network> {
    let spec = match (input, ring) {
        (Some(path), None) => NetworkSpec::from_file(path)
            .with_context(|| format!("reading {}", path.display()))?,
        (None, Some(n)) => {
            if n < 2 {
                bail!("a ring needs at least 2 servers");
            }
            gen::ring(n, RingParams::default())
        }
        _ => bail!("exactly one of --input and --ring must be given"),
    };
    Ok(build_network(&spec)?)
}

fn out_writer(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_validate(file: &Path) -> anyhow::Result<ExitCode> {
    let net = load_network(Some(file), None)?;
    println!("nodes: {}", net.node_count());
    println!("flows: {}", net.flow_count());
    println!("transit edges: {}", net.edge_count());
    println!("transit (edge,flow) pairs: {}", net.pair_count());
    println!("cyclic dependencies: {}", net.has_cycle());
    println!("local stability:");
    let mut unstable = 0;
    for entry in net.check_local_stability() {
        println!(
            "  {}: utilization {:.6} {}",
            entry.node,
            entry.utilization,
            if entry.stable { "stable" } else { "UNSTABLE" }
        );
        if !entry.stable {
            unstable += 1;
        }
    }
    if unstable > 0 {
        println!("{unstable} unstable node(s); solvers will refuse this network");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_ring(args: &GenRingArgs) -> anyhow::Result<ExitCode> {
    if args.n < 2 {
        bail!("a ring needs at least 2 servers");
    }
    let spec = gen::ring(
        args.n,
        RingParams {
            latency_s: args.latency,
            rate_bps: args.rate,
            flow_rate_bps: args.flow_rate,
            burst_bits: args.burst,
        },
    );
    build_network(&spec)?; // parameter validation
    let mut w = out_writer(args.out.as_deref())?;
    w.write_all(spec.to_toml().as_bytes())?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn parse_cut(net: &Network, arg: Option<&str>, strategy: CutStrategyArg) -> anyhow::Result<Cut> {
    let (strategy, edges): (CutStrategy, Vec<String>) = match (arg, strategy) {
        (Some(list), _) => (
            CutStrategy::User,
            list.split(',').map(|s| s.trim().to_string()).collect(),
        ),
        (None, CutStrategyArg::Dfs) => (CutStrategy::DfsBackEdges, vec![]),
        (None, CutStrategyArg::Min) => (CutStrategy::ExhaustiveMin, vec![]),
        (None, CutStrategyArg::User) => bail!("--cut-strategy user requires --cut"),
    };
    Ok(find_cut(net, strategy, &edges)?)
}

fn parse_schedule(arg: &str) -> anyhow::Result<Schedule> {
    if arg == "rr" {
        return Ok(Schedule::RoundRobin);
    }
    if let Some(seed) = arg.strip_prefix("random:") {
        return Ok(Schedule::RandomPermutation {
            seed: seed.parse().context("schedule seed must be an integer")?,
        });
    }
    if let Some(list) = arg.strip_prefix("user:") {
        let rounds: Vec<Vec<String>> = list
            .split(';')
            .map(|round| round.split(',').map(|s| s.trim().to_string()).collect())
            .collect();
        return Ok(Schedule::UserList { rounds });
    }
    bail!("unknown schedule `{arg}` (expected rr, random:<seed> or user:<rounds>)");
}

fn status_exit(statuses: &[SolveStatus]) -> ExitCode {
    if statuses.iter().any(|s| s.is_diverged()) {
        ExitCode::from(2)
    } else if statuses
        .iter()
        .any(|s| matches!(s, SolveStatus::IterationLimit))
    {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

/// Insert `_tag` before the file extension.
fn tagged_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}_{tag}.{ext}"),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}

fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let net = load_network(args.input.as_deref(), args.ring)?;
    let opts = args.solve.to_options(args.trace.is_some());
    let schedule = parse_schedule(&args.schedule)?;

    let selected: Vec<Algo> = match args.algo {
        Algo::All => vec![Algo::Sync, Algo::Async, Algo::Alt, Algo::Fptfa],
        one => vec![one],
    };
    if selected.len() > 1 && args.out.is_none() {
        bail!("--algo all writes one file per scheme; give --out");
    }

    let mut statuses = Vec::new();
    for algo in &selected {
        let (label, outcome): (&str, SolverOutcome) = match algo {
            Algo::Sync => ("sync", run_sync(&net, &opts)?),
            Algo::Alt => ("alt", run_alt(&net, &opts)?),
            Algo::Async => ("async", run_async(&net, &schedule, &opts)?),
            Algo::Fptfa => {
                let cut = parse_cut(&net, args.cut.as_deref(), args.cut_strategy)?;
                ("fptfa", run_fptfa(&net, &cut, &opts)?)
            }
            Algo::All => unreachable!(),
        };
        let out_path = args.out.as_ref().map(|p| {
            if selected.len() > 1 {
                tagged_path(p, label)
            } else {
                p.clone()
            }
        });
        report::write_results_csv(&net, &outcome, out_writer(out_path.as_deref())?)?;
        if let Some(trace_path) = &args.trace {
            let path = if selected.len() > 1 {
                tagged_path(trace_path, label)
            } else {
                trace_path.clone()
            };
            let trace = outcome.trace.as_deref().unwrap_or(&[]);
            tfa_core::solvers::write_trace_csv(&net, trace, out_writer(Some(&path))?)?;
        }
        statuses.push(outcome.status);
    }
    Ok(status_exit(&statuses))
}

fn cmd_compare(args: &CompareArgs) -> anyhow::Result<ExitCode> {
    let opts = args.solve.to_options(args.plot_out.is_some());
    let schedules = args
        .schedule
        .iter()
        .map(|s| parse_schedule(s))
        .collect::<anyhow::Result<Vec<_>>>()?;

    // One entry per analyzed network: (size label, network).
    let targets: Vec<(usize, Network)> = if let Some(path) = &args.input {
        let net = load_network(Some(path), None)?;
        vec![(net.node_count(), net)]
    } else {
        args.ring_sizes
            .split(',')
            .map(|tok| {
                let n: usize = tok.trim().parse().context("ring sizes must be integers")?;
                Ok((n, load_network(None, Some(n))?))
            })
            .collect::<anyhow::Result<Vec<_>>>()?
    };

    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut statuses = Vec::new();
    for (size, net) in &targets {
        let cuts: Vec<Cut> = if args.cut.is_empty() {
            vec![parse_cut(net, None, args.cut_strategy)?]
        } else {
            args.cut
                .iter()
                .map(|c| parse_cut(net, Some(c), CutStrategyArg::User))
                .collect::<anyhow::Result<Vec<_>>>()?
        };
        let report = tfa_core::solvers::compare_algorithms(net, &opts, &cuts, &schedules)?;
        for run in &report.runs {
            statuses.push(run.status.clone());
        }
        rows.extend(report::comparison_rows(&report, *size));
        if args.plot_out.is_some() {
            // Re-run the two plain schemes with traces for plot data; the
            // comparison itself stays trace-free to keep its cost flat.
            for (label, outcome) in [
                ("sync", run_sync(net, &opts)?),
                ("alt", run_alt(net, &opts)?),
            ] {
                if let Some(trace) = &outcome.trace {
                    plot.extend(report::plot_rows(net, label, *size, trace));
                }
            }
        }
    }
    report::write_comparison_csv(&rows, out_writer(args.out.as_deref())?)?;
    if let Some(path) = &args.plot_out {
        report::write_plot_csv(&plot, out_writer(Some(path))?)?;
    }
    eprintln!(
        "note: node_updates counts per-node delay evaluations; it is the \
         machine-independent work metric, wall-clock time is not reported"
    );
    Ok(status_exit(&statuses))
}

fn cmd_oracle(args: &OracleArgs) -> anyhow::Result<ExitCode> {
    let net = load_network(args.input.as_deref(), args.ring)?;
    let sys = linearize(&net)?;
    let outcome = exact_fixpoint(&sys)?;
    report::write_oracle_csv(&net, &outcome, out_writer(args.out.as_deref())?)?;
    Ok(match outcome {
        OracleOutcome::Fixpoint(_) => ExitCode::SUCCESS,
        OracleOutcome::NoFixpoint { .. } => ExitCode::from(2),
    })
}
