//! `dyperm`: incremental community detection on dynamic graphs.
//!
//! Subcommands: `init` (static base structure), `run` (event-stream
//! processing with optional per-time-stamp scoring), `perm` (one-shot
//! scoring), `eval` (partition agreement), `gen` (synthetic workloads),
//! `diff` (snapshot pair to event stream) and `bench` (incremental versus
//! static re-initialization).
//!
//! Exit codes: 0 success, 2 usage error, 3 input-format error, 4 internal
//! invariant violation (audit failure).

mod manifest;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};

use dyperm_core::engine::{Engine, EngineError};
use dyperm_core::evaluation::{self, ari, nmi};
use dyperm_core::graph::{CommunityId, Graph, NodeId, Partition};
use dyperm_core::io::{self, EventRecord, FileError};
use dyperm_core::static_init::{self, InitConfig};
use dyperm_core::workload::{self, GenConfig};
use dyperm_core::{bench, permanence};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "dyperm",
    version = concat!(env!("CARGO_PKG_VERSION"), " (file formats v1)"),
    about = "Incremental community detection on dynamic graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a base community structure for a static snapshot.
    Init(InitArgs),
    /// Apply an event stream incrementally, writing one CSV row per time-stamp.
    Run(RunArgs),
    /// Score a snapshot against a community file.
    Perm(PermArgs),
    /// Agreement (NMI, normalized by mean entropy, and adjusted Rand index)
    /// between two community files covering the same nodes.
    Eval(EvalArgs),
    /// Generate a synthetic dynamic workload with ground truth.
    Gen(GenArgs),
    /// Emit the event stream turning one snapshot into another.
    Diff(DiffArgs),
    /// Compare incremental updating against per-event static recomputation.
    Bench(BenchArgs),
}

#[derive(Args)]
struct InitArgs {
    /// Edge-list snapshot to initialize from.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum local-moving sweeps per restart.
    #[arg(long, default_value_t = 20)]
    sweeps: usize,
    /// Minimum per-node permanence gain for a move to be applied.
    #[arg(long, default_value_t = 1e-9)]
    min_gain: f64,
    /// Number of restarts (seeds seed..seed+k); the best result by graph
    /// permanence is kept.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Community file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("base").required(true).args(["base_communities", "static_init"])))]
struct RunArgs {
    #[arg(long)]
    base_snapshot: PathBuf,
    /// Base community structure (ground truth or a previous `init` output).
    #[arg(long)]
    base_communities: Option<PathBuf>,
    /// Derive the base structure by running the static maximizer.
    #[arg(long)]
    static_init: bool,
    /// Seed for --static-init.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    events: PathBuf,
    /// Directory holding per-time-stamp ground truth files `t<k>.comms`.
    #[arg(long)]
    truth_dir: Option<PathBuf>,
    /// Comma-separated subset of `nmi,ari` to report per time-stamp.
    #[arg(long, default_value = "nmi,ari")]
    metrics: String,
    #[arg(long)]
    out: PathBuf,
    /// Reconcile the incremental state against a from-scratch evaluation
    /// after every event (slow; exit code 4 on divergence).
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct PermArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    /// Optional per-vertex TSV (`node I d e_max c_in perm`).
    #[arg(long)]
    per_vertex: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    detected: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Mixing ratio: expected fraction of a node's edges that are external.
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    #[arg(long, default_value_t = 10.0)]
    avg_degree: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Fraction of edges rewired per step.
    #[arg(long, default_value_t = 0.02)]
    churn: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory receiving t0.edges, t<k>.comms and events.tsv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DiffArgs {
    before: PathBuf,
    after: PathBuf,
    /// Event stream file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("base").required(true).args(["base_communities", "static_init"])))]
struct BenchArgs {
    #[arg(long)]
    base_snapshot: PathBuf,
    #[arg(long)]
    base_communities: Option<PathBuf>,
    #[arg(long)]
    static_init: bool,
    /// Seed for --static-init and for the static arm's re-initializations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    events: PathBuf,
    /// Optional per-event CSV report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Invariant(String),
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::AuditFailed(msg) => CliError::Invariant(format!("audit failed: {msg}")),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Init(args) => cmd_init(args),
        Command::Run(args) => cmd_run(args),
        Command::Perm(args) => cmd_perm(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Diff(args) => cmd_diff(args),
        Command::Bench(args) => cmd_bench(args),
    };
    let code = match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("dyperm: {msg}");
            2
        }
        Err(CliError::Input(msg)) => {
            eprintln!("dyperm: {msg}");
            3
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("dyperm: {msg}");
            4
        }
    };
    std::process::exit(code);
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let edges = io::read_edge_list(path)?;
    Graph::from_edges(&edges).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Loads a community file as the base structure for `graph`: arbitrary file
/// labels are remapped onto dense ids and the file must cover the graph's
/// node set exactly.
fn load_base_partition(graph: &Graph, path: &Path) -> Result<Partition, CliError> {
    let pairs = io::read_communities(path)?;
    let mut labels: BTreeSet<u64> = BTreeSet::new();
    for &(node, label) in &pairs {
        if !graph.has_node(node) {
            return Err(CliError::Input(format!(
                "{}: node {node} is not in the snapshot",
                path.display()
            )));
        }
        labels.insert(label);
    }
    if pairs.len() != graph.node_count() {
        return Err(CliError::Input(format!(
            "{}: covers {} nodes, snapshot has {}",
            path.display(),
            pairs.len(),
            graph.node_count()
        )));
    }
    let dense: std::collections::BTreeMap<u64, u64> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i as u64))
        .collect();
    Ok(Partition::from_assignments(
        &pairs
            .iter()
            .map(|&(node, label)| (node, CommunityId(dense[&label])))
            .collect::<Vec<_>>(),
    ))
}

/// Loads a community file as scoring truth; no coverage requirement.
fn load_truth_partition(path: &Path) -> Result<Partition, CliError> {
    let pairs = io::read_communities(path)?;
    Ok(Partition::from_assignments(
        &pairs
            .iter()
            .map(|&(node, label)| (node, CommunityId(label)))
            .collect::<Vec<_>>(),
    ))
}

fn resolve_base(
    graph: &Graph,
    communities: Option<&PathBuf>,
    use_static: bool,
    seed: u64,
    man: &mut RunManifest,
) -> Result<Partition, CliError> {
    match communities {
        Some(path) => {
            man.input(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            load_base_partition(graph, path)
        }
        None => {
            debug_assert!(use_static);
            static_init::maximize(graph, &InitConfig { seed, ..InitConfig::default() })
                .map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_init(args: InitArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.graph)?;
    let cfg = InitConfig {
        max_sweeps: args.sweeps,
        seed: args.seed,
        min_gain: args.min_gain,
    };
    let partition = static_init::best_of(&graph, &cfg, args.restarts)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let pairs: Vec<(NodeId, u64)> = partition.assignments().map(|(u, c)| (u, c.0)).collect();
    io::write_communities(&args.out, &pairs)?;
    let score = permanence::graph_permanence(&graph, &partition)
        .map_err(|e| CliError::Input(e.to_string()))?;
    println!(
        "communities={} graph_perm={:.6}",
        partition.community_count(),
        score.graph_permanence
    );
    Ok(())
}

#[derive(Clone, Copy)]
struct MetricChoice {
    nmi: bool,
    ari: bool,
}

fn parse_metrics(list: &str) -> Result<MetricChoice, CliError> {
    let mut choice = MetricChoice {
        nmi: false,
        ari: false,
    };
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "nmi" => choice.nmi = true,
            "ari" => choice.ari = true,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown metric `{other}` (expected nmi, ari)"
                )))
            }
        }
    }
    if !choice.nmi && !choice.ari {
        return Err(CliError::Usage("no metrics selected".to_string()));
    }
    Ok(choice)
}

struct RowWriter {
    body: String,
    truth_dir: Option<PathBuf>,
    metrics: MetricChoice,
    rows: usize,
}

impl RowWriter {
    fn new(truth_dir: Option<PathBuf>, metrics: MetricChoice) -> Self {
        let mut header = String::from("timestamp,n_nodes,n_edges,n_communities,graph_perm");
        if truth_dir.is_some() {
            if metrics.nmi {
                header.push_str(",nmi");
            }
            if metrics.ari {
                header.push_str(",ari");
            }
            header.push_str(",skipped");
        }
        header.push_str(",elapsed_us\n");
        RowWriter {
            body: header,
            truth_dir,
            metrics,
            rows: 0,
        }
    }

    fn push(&mut self, engine: &Engine, timestamp: u64, elapsed_us: u128) -> Result<(), CliError> {
        write!(
            self.body,
            "{},{},{},{},{:.6}",
            timestamp,
            engine.graph().node_count(),
            engine.graph().edge_count(),
            engine.partition().community_count(),
            engine.maintained_graph_permanence()
        )
        .expect("string write");
        if let Some(dir) = &self.truth_dir {
            let path = dir.join(format!("t{timestamp}.comms"));
            if path.is_file() {
                let truth = load_truth_partition(&path)?;
                let score = evaluation::score_against_truth(engine.partition(), &truth);
                if self.metrics.nmi {
                    write!(self.body, ",{:.6}", score.nmi).expect("string write");
                }
                if self.metrics.ari {
                    write!(self.body, ",{:.6}", score.ari).expect("string write");
                }
                write!(self.body, ",{}", score.skipped).expect("string write");
            } else {
                let blanks =
                    usize::from(self.metrics.nmi) + usize::from(self.metrics.ari) + 1;
                self.body.push_str(&",".repeat(blanks));
            }
        }
        writeln!(self.body, ",{elapsed_us}").expect("string write");
        self.rows += 1;
        Ok(())
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let metrics = parse_metrics(&args.metrics)?;
    let mut man = RunManifest::new("run");
    man.flag("base_snapshot", args.base_snapshot.display());
    man.flag("events", args.events.display());
    man.flag("audit", args.audit);
    man.flag("metrics", &args.metrics);
    man.flag("seed", args.seed);
    if let Some(dir) = &args.truth_dir {
        man.flag("truth_dir", dir.display());
    }
    if let Some(path) = &args.base_communities {
        man.flag("base_communities", path.display());
    } else {
        man.flag("static_init", true);
    }

    let graph = load_graph(&args.base_snapshot)?;
    man.input(&args.base_snapshot)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let base = resolve_base(
        &graph,
        args.base_communities.as_ref(),
        args.static_init,
        args.seed,
        &mut man,
    )?;
    let records = io::read_events(&args.events)?;
    man.input(&args.events)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let mut engine = Engine::new(graph, base)?;
    let mut writer = RowWriter::new(args.truth_dir.clone(), metrics);

    // One row per time-stamp; the base state is time-stamp 0 unless the
    // stream itself opens with t=0 events, which then fold into that row.
    let mut groups: Vec<(u64, Vec<EventRecord>)> = Vec::new();
    for record in records {
        match groups.last_mut() {
            Some((t, batch)) if *t == record.event.timestamp => batch.push(record),
            _ => groups.push((record.event.timestamp, vec![record])),
        }
    }
    let mut events_processed = 0u64;
    let mut apply_group = |engine: &mut Engine, batch: &[EventRecord]| -> Result<u128, CliError> {
        let t = Instant::now();
        for record in batch {
            engine.apply(&record.event).map_err(|e| match e {
                EngineError::AuditFailed(msg) => CliError::Invariant(msg),
                other => CliError::Input(format!(
                    "{}:{}: {other}",
                    args.events.display(),
                    record.line
                )),
            })?;
            events_processed += 1;
        }
        let elapsed = t.elapsed().as_micros();
        if args.audit {
            engine.audit()?;
        }
        Ok(elapsed)
    };

    let mut remaining = groups.as_slice();
    let base_elapsed = match remaining.first() {
        Some((0, batch)) => {
            let elapsed = apply_group(&mut engine, batch)?;
            remaining = &remaining[1..];
            elapsed
        }
        _ => 0,
    };
    writer.push(&engine, 0, base_elapsed)?;
    for (timestamp, batch) in remaining {
        let elapsed = apply_group(&mut engine, batch)?;
        writer.push(&engine, *timestamp, elapsed)?;
    }

    write_text(&args.out, &writer.body)?;
    man.events_processed = events_processed;
    man.wall_clock_us = started.elapsed().as_micros();
    let rows = writer.rows;
    man.seal(&args.out, rows)
        .map_err(|e| CliError::Input(format!("manifest: {e}")))?;
    Ok(())
}

fn cmd_perm(args: PermArgs) -> Result<(), CliError> {
    let graph = load_graph(&args.graph)?;
    let partition = load_base_partition(&graph, &args.communities)?;
    let report = permanence::graph_permanence(&graph, &partition)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(path) = &args.per_vertex {
        let mut body = String::from("node\tI\td\te_max\tc_in\tperm\n");
        for (node, b) in &report.per_vertex {
            writeln!(
                body,
                "{node}\t{}\t{}\t{}\t{:.6}\t{:.6}",
                b.internal_degree, b.degree, b.max_external_degree, b.internal_clustering, b.permanence
            )
            .expect("string write");
        }
        write_text(path, &body)?;
    }
    println!("graph_perm={:.6}", report.graph_permanence);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let detected = load_truth_partition(&args.detected)?;
    let truth = load_truth_partition(&args.truth)?;
    let nmi_score = nmi(&detected, &truth).map_err(|e| CliError::Input(e.to_string()))?;
    let ari_score = ari(&detected, &truth).map_err(|e| CliError::Input(e.to_string()))?;
    println!("nmi={nmi_score:.6} ari={ari_score:.6}");
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let cfg = GenConfig {
        n: args.n,
        k: args.k,
        mu: args.mu,
        avg_degree: args.avg_degree,
        steps: args.steps,
        churn: args.churn,
        seed: args.seed,
    };
    let w = workload::generate(&cfg).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out_dir.display())))?;
    io::write_edge_list(&args.out_dir.join("t0.edges"), &w.initial_edges)?;
    for (step, truth) in w.truths.iter().enumerate() {
        io::write_communities(&args.out_dir.join(format!("t{step}.comms")), truth)?;
    }
    io::write_events(&args.out_dir.join("events.tsv"), &w.events)?;
    println!(
        "n={} edges={} steps={} events={}",
        cfg.n,
        w.initial_edges.len(),
        cfg.steps,
        w.events.len()
    );
    Ok(())
}

fn cmd_diff(args: DiffArgs) -> Result<(), CliError> {
    let before = io::read_edge_list(&args.before)?;
    let after = io::read_edge_list(&args.after)?;
    let events = workload::snapshot_diff(&before, &after);
    let body = io::events_to_string(&events);
    match &args.out {
        Some(path) => write_text(path, &body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut man = RunManifest::new("bench");
    man.flag("base_snapshot", args.base_snapshot.display());
    man.flag("events", args.events.display());
    man.flag("seed", args.seed);

    let graph = load_graph(&args.base_snapshot)?;
    man.input(&args.base_snapshot)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let base = resolve_base(
        &graph,
        args.base_communities.as_ref(),
        args.static_init,
        args.seed,
        &mut man,
    )?;
    let records = io::read_events(&args.events)?;
    man.input(&args.events)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let events: Vec<_> = records.iter().map(|r| r.event).collect();

    let init = InitConfig {
        seed: args.seed,
        ..InitConfig::default()
    };
    let report = bench::run(&graph, &base, &events, &init)?;
    println!("events={}", report.rows.len());
    println!("incremental_total_us={}", report.incremental_total_us);
    println!("static_total_us={}", report.static_total_us);
    println!("speedup={:.6}", report.speedup);
    println!("final_nmi={:.6}", report.final_agreement);

    if let Some(path) = &args.out {
        let mut body =
            String::from("index,timestamp,kind,affected_edges,incremental_us,static_us\n");
        for row in &report.rows {
            writeln!(
                body,
                "{},{},{},{},{},{}",
                row.index, row.timestamp, row.kind, row.affected_edges, row.incremental_us, row.static_us
            )
            .expect("string write");
        }
        write_text(path, &body)?;
        man.events_processed = report.rows.len() as u64;
        man.wall_clock_us = started.elapsed().as_micros();
        man.seal(path, report.rows.len())
            .map_err(|e| CliError::Input(format!("manifest: {e}")))?;
    }
    Ok(())
}
