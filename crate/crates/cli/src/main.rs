//! Batch front-end for the galmem library.
//!
//! Every subcommand resolves its configuration, runs deterministically
//! from a single recorded 64-bit seed, and writes its artifacts plus a
//! `manifest.json` carrying the full config and per-file SHA-256
//! digests. Re-running with the same arguments reproduces identical
//! bytes. Exit codes: 0 success, 1 invariant failure, 2 usage.

mod output;

use clap::{Args, Parser, Subcommand};
use galmem::counterfactual::{self, CfQuery, InjectAbstention};
use galmem::gf2::Generator;
use galmem::memory::{BlockMemory, MemoryConfig, RrMode};
use galmem::qod;
use galmem::reasoner::{self, FrontierConfig};
use galmem::snapshot;
use galmem::synth;
use galmem::{CounterRng, Residue};
use output::{sha256_hex, worker_count, OutDir};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "galmem", version, about = "Deterministic Galois-field memory harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight statistics and tail concentration of the diffusion map.
    Qod(QodArgs),
    /// Compare diffusion against the random sparse projection baseline.
    RspCompare(RspArgs),
    /// Load a synthetic relation tree and measure CR2 decay.
    Bench(BenchArgs),
    /// Role-filler binding round-trip and sentence swap demonstration.
    HdcDemo(HdcArgs),
    /// Run a counterfactual query from a JSON file.
    Cf(CfArgs),
    /// Save or verify a binary memory snapshot.
    Snapshot(SnapshotArgs),
}

#[derive(Args, Serialize)]
struct GeneratorArg {
    /// Degree of a built-in primitive generator (4, 8, 10, 16, 20, 24).
    #[arg(long)]
    m: Option<u32>,
    /// Explicit generator as g:<hex>; validated for primitivity.
    #[arg(long = "G", value_name = "g:hex", conflicts_with = "m")]
    generator: Option<String>,
}

impl GeneratorArg {
    fn resolve(&self) -> Result<Generator, String> {
        match (&self.m, &self.generator) {
            (Some(m), None) => Generator::builtin(*m).map_err(|e| e.to_string()),
            (None, Some(text)) => Generator::from_hex_string(text).map_err(|e| e.to_string()),
            _ => Err("exactly one of --m or --G is required".to_string()),
        }
    }
}

#[derive(Args, Serialize)]
struct QodArgs {
    #[command(flatten)]
    generator: GeneratorArg,
    /// Enumerate all nonzero residues instead of sampling. This is the
    /// default when neither --l nor --samples is given.
    #[arg(long)]
    exhaustive: bool,
    /// Input length for sampled runs (must exceed m; default 2m).
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Monte Carlo sample count (default 100000 when sampling).
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "galmem-out")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct RspArgs {
    #[command(flatten)]
    generator: GeneratorArg,
    /// Ones per projection row.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Input length.
    #[arg(long, default_value_t = 1023)]
    l: usize,
    /// Matrix draws for the worst-case table.
    #[arg(long, default_value_t = 8)]
    trials: u64,
    /// Matrix draws per expectation estimate.
    #[arg(long, default_value_t = 10_000)]
    mc_trials: u64,
    /// Input distances to probe (default: 1, L/5, L).
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "galmem-out")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long, default_value_t = 16)]
    n_blocks: usize,
    /// Address bits per block (built-in generator degree).
    #[arg(long, default_value_t = 10)]
    m: u32,
    /// Segment bits per block.
    #[arg(long, default_value_t = 16)]
    segment_len: usize,
    #[arg(long, value_enum, default_value_t = RrFlag::Dontcare)]
    rr: RrFlag,
    #[arg(long, value_enum, default_value_t = ScheduleFlag::Unified)]
    schedule: ScheduleFlag,
    /// Children (and candidate labels) per node of the synthetic tree.
    #[arg(long, default_value_t = 2)]
    branching: u32,
    /// Hops from root to leaf.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    /// Frontier size for beam traversal.
    #[arg(long, default_value_t = 8)]
    fs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of relation keys given one injected block abstention.
    #[arg(long, default_value_t = 0.0)]
    collision_rate: f64,
    /// Constant per-hop confidence for synthetic geometric decay
    /// (skips the memory entirely; use with --depths).
    #[arg(long)]
    p: Option<f64>,
    /// Denominator for --p as a vote fraction.
    #[arg(long, default_value_t = 10)]
    p_denominator: u32,
    /// Depth range for --p, inclusive (e.g. 1..6).
    #[arg(long, default_value = "1..6")]
    depths: String,
    /// Load edges from a subject<TAB>relation<TAB>object file instead
    /// of generating the tree.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Start node when --edges is used.
    #[arg(long, default_value_t = 1)]
    start: u64,
    /// Candidate relation labels when --edges is used.
    #[arg(long, value_delimiter = ',')]
    relations: Option<Vec<u64>>,
    #[arg(long, default_value = "galmem-out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
enum RrFlag {
    Rescue,
    Dontcare,
}

impl From<RrFlag> for RrMode {
    fn from(f: RrFlag) -> RrMode {
        match f {
            RrFlag::Rescue => RrMode::Rescue,
            RrFlag::Dontcare => RrMode::DontCare,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
enum ScheduleFlag {
    Unified,
    Gated,
}

#[derive(Args, Serialize)]
struct HdcArgs {
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    /// Random (role, filler) pairs for the round-trip sweep.
    #[arg(long, default_value_t = 1000)]
    pairs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "galmem-out")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct CfArgs {
    /// Query JSON file.
    #[arg(long)]
    query: PathBuf,
    /// Poison one block of the given counterfactual hop (0-based).
    #[arg(long)]
    inject_abstention: Option<usize>,
    #[arg(long, default_value = "galmem-out")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct SnapshotArgs {
    #[command(subcommand)]
    action: SnapshotAction,
}

#[derive(Subcommand, Serialize)]
enum SnapshotAction {
    /// Build a memory from a seeded random workload and save its image.
    Save {
        #[arg(long, default_value_t = 8)]
        n_blocks: usize,
        #[arg(long, default_value_t = 10)]
        m: u32,
        #[arg(long, default_value_t = 16)]
        segment_len: usize,
        #[arg(long, value_enum, default_value_t = RrFlag::Rescue)]
        rr: RrFlag,
        #[arg(long, default_value_t = 1000)]
        writes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "galmem-out")]
        out_dir: PathBuf,
    },
    /// Load an image, re-serialize it, and check digest equality.
    Verify { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Qod(args) => cmd_qod(args),
        Command::RspCompare(args) => cmd_rsp(args),
        Command::Bench(args) => cmd_bench(args),
        Command::HdcDemo(args) => cmd_hdc(args),
        Command::Cf(args) => cmd_cf(args),
        Command::Snapshot(args) => cmd_snapshot(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}

enum Failure {
    Usage(String),
    Invariant(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Invariant(format!("io: {e}"))
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn config_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("args serialize")
}

// ---------------------------------------------------------------------------
// qod
// ---------------------------------------------------------------------------

fn cmd_qod(args: QodArgs) -> Result<(), Failure> {
    let generator = args.generator.resolve().map_err(Failure::Usage)?;
    let exhaustive = args.exhaustive || (args.l.is_none() && args.samples.is_none());
    let (report, histogram) = if exhaustive {
        qod::concentration_exhaustive(&generator, args.epsilon).map_err(usage)?
    } else {
        let l = args.l.unwrap_or(2 * generator.degree() as usize);
        qod::concentration_check(
            &generator,
            l,
            args.epsilon,
            args.samples.unwrap_or(100_000),
            args.seed,
            worker_count(),
        )
        .map_err(usage)?
    };

    let mut out = OutDir::create(&args.out_dir)?;
    out.write_json("report.json", &report)?;
    out.write("histogram.csv", histogram.to_csv().as_bytes())?;
    out.finish("qod", config_json(&args), args.seed)?;

    println!(
        "qod m={} mean={} variance={:.6} tail={} bound={:.6}",
        report.m, report.mean, report.variance, report.empirical_tail, report.hoeffding_bound
    );
    if !report.tail_within_bound() {
        return Err(Failure::Invariant(format!(
            "empirical tail {} exceeds Hoeffding bound {} plus slack {}",
            report.empirical_tail,
            report.hoeffding_bound,
            report.tail_slack()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// rsp-compare
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExpectationRow {
    d: usize,
    formula: f64,
    parity_exact: f64,
    mc_mean: f64,
    mc_sigma: f64,
}

fn cmd_rsp(args: RspArgs) -> Result<(), Failure> {
    let generator = args.generator.resolve().map_err(Failure::Usage)?;
    if args.k == 0 || args.k > args.l {
        return Err(Failure::Usage(format!(
            "need 1 <= k <= L, got k={} L={}",
            args.k, args.l
        )));
    }
    let m = generator.degree();
    let distances = args
        .d
        .clone()
        .unwrap_or_else(|| vec![1, (args.l / 5).max(1), args.l]);
    if distances.iter().any(|&d| d == 0 || d > args.l) {
        return Err(Failure::Usage("distances must be in [1, L]".into()));
    }

    let table = qod::compare_worst_case(&generator, args.k, args.l, args.trials, args.seed)
        .map_err(usage)?;
    let mut csv = String::from("j,psi_weight,rsp_max_distance\n");
    for row in &table {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.j, row.psi_weight, row.rsp_max_distance
        ));
    }

    let expectations: Vec<ExpectationRow> = distances
        .iter()
        .map(|&d| {
            let (mc_mean, mc_sigma) =
                qod::rsp_mc_mean_distance(m, args.l, args.k, d, args.mc_trials, args.seed);
            ExpectationRow {
                d,
                formula: qod::rsp_expected_distance(m, args.l, args.k, d),
                parity_exact: qod::rsp_parity_expected_distance(m, args.l, args.k, d),
                mc_mean,
                mc_sigma,
            }
        })
        .collect();

    let mut out = OutDir::create(&args.out_dir)?;
    out.write("compare.csv", csv.as_bytes())?;
    out.write_json("expectations.json", &expectations)?;
    out.finish("rsp-compare", config_json(&args), args.seed)?;

    let psi_min = table.iter().map(|r| r.psi_weight).min().unwrap_or(0);
    println!(
        "rsp-compare m={m} k={} L={} psi_min={psi_min} rows={}",
        args.k,
        args.l,
        table.len()
    );
    if psi_min == 0 {
        return Err(Failure::Invariant(
            "a diffused single-bit flip produced weight zero".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn parse_depths(text: &str) -> Result<Vec<u32>, Failure> {
    let trimmed = text.replace("..=", "..");
    let (lo, hi) = trimmed
        .split_once("..")
        .ok_or_else(|| Failure::Usage(format!("bad depth range {text:?}; expected a..b")))?;
    let lo: u32 = lo
        .parse()
        .map_err(|_| Failure::Usage(format!("bad depth range start {lo:?}")))?;
    let hi: u32 = hi
        .parse()
        .map_err(|_| Failure::Usage(format!("bad depth range end {hi:?}")))?;
    if lo == 0 || hi < lo {
        return Err(Failure::Usage(format!("bad depth range {text:?}")));
    }
    Ok((lo..=hi).collect())
}

#[derive(Serialize)]
struct RankedPath {
    nodes: Vec<u64>,
    cr2: f64,
    hops: Vec<f64>,
}

#[derive(Serialize)]
struct BenchRanking {
    complete_paths: usize,
    partial_paths: usize,
    effective_branching: f64,
    paths: Vec<RankedPath>,
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if let Some(p) = args.p {
        return bench_geometric(&args, p);
    }

    let generator = Generator::builtin(args.m).map_err(usage)?;
    let input_len = args.n_blocks * args.segment_len;
    let rr: RrMode = args.rr.into();
    let config = match args.schedule {
        ScheduleFlag::Unified => {
            let seed_word = CounterRng::new(args.seed, 0).word_at(0);
            let mask = (1u64 << args.m) - 1;
            MemoryConfig::unified(
                args.n_blocks,
                generator,
                Residue(seed_word & mask),
                rr,
                input_len,
            )
        }
        ScheduleFlag::Gated => MemoryConfig::gated(
            args.n_blocks,
            vec![generator; args.n_blocks],
            rr,
            input_len,
            args.seed,
        ),
    };
    let mut mem = BlockMemory::new(config).map_err(usage)?;

    let (edges, start, labels) = match &args.edges {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let edges = reasoner::parse_edges(&text).map_err(usage)?;
            let labels = args.relations.clone().unwrap_or_else(|| {
                let mut ls: Vec<u64> = edges.iter().map(|e| e.relation).collect();
                ls.sort_unstable();
                ls.dedup();
                ls
            });
            (edges, args.start, labels)
        }
        None => {
            let spec = synth::TreeSpec {
                branching: args.branching,
                depth: args.depth,
            };
            (
                synth::generate_tree(&spec),
                synth::TreeSpec::ROOT,
                spec.label_set(),
            )
        }
    };
    let load_report = reasoner::load_edges(&mut mem, &edges).map_err(usage)?;

    let mut injected = 0u64;
    if args.collision_rate > 0.0 {
        if rr != RrMode::DontCare {
            return Err(Failure::Usage(
                "--collision-rate needs --rr dontcare".into(),
            ));
        }
        let mut rng = CounterRng::new(args.seed ^ 0x1badb002, 1);
        for edge in &edges {
            if rng.next_f64() < args.collision_rate {
                let key = reasoner::relation_key(edge.subject, edge.relation, input_len);
                let block = rng.next_below(args.n_blocks as u64) as usize;
                synth::inject_block_abstention(&mut mem, &key, block, &mut rng)
                    .map_err(|e| Failure::Invariant(e.to_string()))?;
                injected += 1;
            }
        }
    }

    let frontier = FrontierConfig { fs: args.fs };
    let mut all_traces = Vec::new();
    let mut full = None;
    for depth in 1..=args.depth as usize {
        match reasoner::traverse(&mem, start, &labels, depth, frontier) {
            Ok(traversal) => {
                all_traces.extend(traversal.complete.iter().cloned());
                if depth == args.depth as usize {
                    full = Some(traversal);
                }
            }
            Err(galmem::Error::NotFound) => {}
            Err(e) => return Err(Failure::Invariant(e.to_string())),
        }
    }
    let full = full
        .ok_or_else(|| Failure::Invariant("no complete path at the requested depth".to_string()))?;

    let ranking = BenchRanking {
        complete_paths: full.complete.len(),
        partial_paths: full.partial.len(),
        effective_branching: reasoner::effective_branching(&full.complete),
        paths: full
            .complete
            .iter()
            .map(|t| RankedPath {
                nodes: t.node_sequence(),
                cr2: t.cr2,
                hops: t.hops.iter().map(|h| h.vote.cr1).collect(),
            })
            .collect(),
    };

    let groups = reasoner::group_by_depth(&all_traces);
    let fit = reasoner::decay_fit(&groups);

    let mut out = OutDir::create(&args.out_dir)?;
    out.write_json("load_report.json", &load_report)?;
    out.write_json("ranking.json", &ranking)?;
    out.write("decay.csv", reasoner::decay_csv(&groups).as_bytes())?;
    match &fit {
        Ok(fit) => out.write_json("fit.json", fit)?,
        Err(e) => out.write_json("fit.json", &serde_json::json!({ "error": e.to_string() }))?,
    }
    out.finish("bench", config_json(&args), args.seed)?;

    println!(
        "bench paths={} eb={} injected={injected} collisions={}",
        ranking.complete_paths, ranking.effective_branching, load_report.collided_writes
    );
    Ok(())
}

fn bench_geometric(args: &BenchArgs, p: f64) -> Result<(), Failure> {
    let depths = parse_depths(&args.depths)?;
    let n = args.p_denominator;
    let votes = (p * n as f64).round() as u32;
    if votes == 0 || votes > n || (votes as f64 / n as f64 - p).abs() > 1e-9 {
        return Err(Failure::Usage(format!(
            "--p {p} is not a vote fraction over denominator {n}"
        )));
    }
    let traces = synth::constant_confidence_traces(votes, n, &depths);
    let groups = reasoner::group_by_depth(&traces);
    let fit = reasoner::decay_fit(&groups).map_err(|e| Failure::Invariant(e.to_string()))?;

    let mut out = OutDir::create(&args.out_dir)?;
    out.write("decay.csv", reasoner::decay_csv(&groups).as_bytes())?;
    out.write_json("fit.json", &fit)?;
    out.finish("bench", config_json(args), args.seed)?;

    println!(
        "bench synthetic p={p} slope={} expected={}",
        fit.slope,
        p.ln()
    );
    if (fit.slope - p.ln()).abs() > 1e-9 {
        return Err(Failure::Invariant(format!(
            "fitted slope {} deviates from ln {p}",
            fit.slope
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// hdc-demo
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct HdcReport {
    demo: galmem::hdc::SentenceDemo,
    roundtrip_pairs: u64,
    roundtrip_failures: u64,
}

fn cmd_hdc(args: HdcArgs) -> Result<(), Failure> {
    let demo = galmem::hdc::sentence_demo(args.dim).map_err(usage)?;
    let mut rng = CounterRng::new(args.seed, 0);
    let mut failures = 0u64;
    for _ in 0..args.pairs {
        let role = galmem::hdc::Hypervector::random(args.dim, &mut rng);
        let filler = galmem::hdc::Hypervector::random(args.dim, &mut rng);
        let bound = galmem::hdc::bind(&role, &filler).map_err(usage)?;
        if galmem::hdc::unbind(&bound, &role).map_err(usage)? != filler {
            failures += 1;
        }
    }
    let report = HdcReport {
        demo,
        roundtrip_pairs: args.pairs,
        roundtrip_failures: failures,
    };

    let mut out = OutDir::create(&args.out_dir)?;
    out.write_json("demo.json", &report)?;
    out.finish("hdc-demo", config_json(&args), args.seed)?;

    println!(
        "hdc-demo dim={} swap_distance={:.4} roundtrip_failures={}",
        args.dim, report.demo.swap_distance, failures
    );
    if !report.demo.pass || failures > 0 {
        return Err(Failure::Invariant("demonstration failed".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// cf
// ---------------------------------------------------------------------------

fn cmd_cf(args: CfArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.query)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.query.display())))?;
    let query: CfQuery = serde_json::from_str(&text).map_err(|e| {
        Failure::Usage(format!(
            "malformed query JSON at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;

    let pi_a = counterfactual::Scaffold::factual(&query).map_err(usage)?;
    let before = snapshot::save_bytes(&pi_a.store);
    let inject = args.inject_abstention.map(|hop| InjectAbstention { hop });
    let run = counterfactual::run_query(&pi_a, &query, inject).map_err(usage)?;
    let after = snapshot::save_bytes(&pi_a.store);

    #[derive(Serialize)]
    struct CfDetails<'a> {
        abduction: &'a counterfactual::Abduction,
        factual_hops: Vec<f64>,
        counterfactual_hops: Vec<f64>,
        factual_snapshot_sha256: String,
        factual_snapshot_intact: bool,
    }
    let details = CfDetails {
        abduction: &run.abduction,
        factual_hops: run.factual_trace.hops.iter().map(|h| h.vote.cr1).collect(),
        counterfactual_hops: run
            .counterfactual_trace
            .hops
            .iter()
            .map(|h| h.vote.cr1)
            .collect(),
        factual_snapshot_sha256: sha256_hex(&before),
        factual_snapshot_intact: before == after,
    };

    let mut out = OutDir::create(&args.out_dir)?;
    out.write_json("response.json", &run.response)?;
    out.write_json("details.json", &details)?;
    out.finish("cf", config_json(&args), query.memory.seed)?;

    println!(
        "cf u_hat={} y_hat={} ratio={} factual_cr2={} counterfactual_cr2={}",
        run.response.u_hat,
        run.response.y_hat,
        run.response.ratio,
        run.response.factual_cr2,
        run.response.counterfactual_cr2
    );
    if before != after {
        return Err(Failure::Invariant(
            "factual scaffold changed during counterfactual work".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// snapshot
// ---------------------------------------------------------------------------

fn cmd_snapshot(args: SnapshotArgs) -> Result<(), Failure> {
    match args.action {
        SnapshotAction::Save {
            n_blocks,
            m,
            segment_len,
            rr,
            writes,
            seed,
            ref out_dir,
        } => {
            let generator = Generator::builtin(m).map_err(usage)?;
            let input_len = n_blocks * segment_len;
            let mask = (1u64 << m) - 1;
            let config = MemoryConfig::unified(
                n_blocks,
                generator,
                Residue(CounterRng::new(seed, 0).word_at(1) & mask),
                rr.into(),
                input_len,
            );
            let mut mem = BlockMemory::new(config).map_err(usage)?;
            for (p, ea) in synth::random_write_workload(writes, input_len, seed) {
                mem.write(&p, ea)
                    .map_err(|e| Failure::Invariant(e.to_string()))?;
            }
            let image = snapshot::save_bytes(&mem);
            let digest = sha256_hex(&image);
            let mut out = OutDir::create(out_dir)?;
            out.write("memory.gmem", &image)?;
            out.finish("snapshot-save", config_json(&args), seed)?;
            println!("snapshot saved: {} bytes sha256={digest}", image.len());
            Ok(())
        }
        SnapshotAction::Verify { ref file } => {
            let image = std::fs::read(file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            let mem = snapshot::load_bytes(&image)
                .map_err(|e| Failure::Invariant(format!("corrupt snapshot: {e}")))?;
            let again = snapshot::save_bytes(&mem);
            let ok = again == image;
            println!(
                "snapshot verify: {} bytes sha256={} round_trip={}",
                image.len(),
                sha256_hex(&image),
                if ok { "identical" } else { "MISMATCH" }
            );
            if !ok {
                return Err(Failure::Invariant(
                    "re-serialized image differs from the input".into(),
                ));
            }
            Ok(())
        }
    }
}
