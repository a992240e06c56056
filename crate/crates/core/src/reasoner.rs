//! Multi-hop traversal with multiplicative path confidence.
//!
//! Relations are stored as (subject, relation) -> object: the key is
//! the subject's hypervector bound with the relation's, and the stored
//! entry address is the object id. Traversal is beam search: at each
//! hop every frontier path tries every candidate relation label, each
//! successful read extends the path and multiplies its confidence by
//! the read's CR1, and the frontier is pruned to the highest-confidence
//! paths. A path's CR2 after n hops is the exact product of its n CR1
//! values, so confidence contracts monotonically along leaky chains.

use crate::error::{Error, Result};
use crate::hdc::{atom_from_bytes, bind, Hypervector};
use crate::memory::{BlockMemory, EntryAddress, VoteResult, WriteReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// Relation storage
// ---------------------------------------------------------------------------

/// One directed labeled edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub subject: u64,
    pub relation: u64,
    pub object: u64,
}

/// Hypervector for a node id (domain-tagged so nodes and labels live in
/// different atom spaces).
pub fn node_hv(id: u64, dim: usize) -> Hypervector {
    let mut bytes = [0u8; 9];
    bytes[0] = b'n';
    bytes[1..].copy_from_slice(&id.to_le_bytes());
    atom_from_bytes(&bytes, dim)
}

/// Hypervector for a relation label id.
pub fn label_hv(id: u64, dim: usize) -> Hypervector {
    let mut bytes = [0u8; 9];
    bytes[0] = b'r';
    bytes[1..].copy_from_slice(&id.to_le_bytes());
    atom_from_bytes(&bytes, dim)
}

/// The stored key for a (subject, relation) pair.
pub fn relation_key(subject: u64, relation: u64, dim: usize) -> crate::gf2::BitPolynomial {
    bind(&node_hv(subject, dim), &label_hv(relation, dim))
        .expect("atoms share the dimension")
        .to_polynomial()
}

/// Ingestion summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub writes: u64,
    /// Writes that hit at least one block collision.
    pub collided_writes: u64,
    pub collisions_per_block: Vec<u64>,
    /// Entries recorded in the rescue table (Rescue mode only).
    pub rescued_entries: u64,
}

/// Write every edge into the memory, one write per record.
pub fn load_edges(mem: &mut BlockMemory, edges: &[RelationRecord]) -> Result<LoadReport> {
    let dim = mem.config().input_len;
    let mut report = LoadReport {
        writes: 0,
        collided_writes: 0,
        collisions_per_block: vec![0; mem.config().n_blocks],
        rescued_entries: 0,
    };
    for edge in edges {
        let key = relation_key(edge.subject, edge.relation, dim);
        let WriteReport {
            collided_blocks,
            rescued,
        } = mem.write(&key, EntryAddress(edge.object))?;
        report.writes += 1;
        if !collided_blocks.is_empty() {
            report.collided_writes += 1;
        }
        for b in collided_blocks {
            report.collisions_per_block[b] += 1;
        }
        report.rescued_entries += rescued as u64;
    }
    Ok(report)
}

/// Parse `subject<TAB>relation<TAB>object` lines, decimal ids.
pub fn parse_edges(text: &str) -> Result<Vec<RelationRecord>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let mut next = |what: &str| -> Result<u64> {
            fields
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", lineno + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad {what}", lineno + 1)))
        };
        let record = RelationRecord {
            subject: next("subject")?,
            relation: next("relation")?,
            object: next("object")?,
        };
        if fields.next().is_some() {
            return Err(Error::Parse(format!(
                "line {}: expected exactly three fields",
                lineno + 1
            )));
        }
        edges.push(record);
    }
    Ok(edges)
}

pub fn format_edges(edges: &[RelationRecord]) -> String {
    let mut out = String::new();
    for e in edges {
        out.push_str(&format!("{}\t{}\t{}\n", e.subject, e.relation, e.object));
    }
    out
}

// ---------------------------------------------------------------------------
// Path traces
// ---------------------------------------------------------------------------

/// One traversal step: the node queried, the relation used, and the
/// full vote that answered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub node: u64,
    pub relation: u64,
    pub vote: VoteResult,
}

/// An ordered hop list with the running confidence product CR2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub hops: Vec<Hop>,
    pub cr2: f64,
}

impl PathTrace {
    pub fn depth(&self) -> usize {
        self.hops.len()
    }

    /// The node the path ends on (target of the last hop).
    pub fn terminal_node(&self) -> Option<u64> {
        self.hops.last().and_then(|h| h.vote.winner).map(|ea| ea.0)
    }

    /// Node sequence including the start, for deterministic tie-breaks.
    pub fn node_sequence(&self) -> Vec<u64> {
        let mut seq: Vec<u64> = self.hops.iter().map(|h| h.node).collect();
        if let Some(t) = self.terminal_node() {
            seq.push(t);
        }
        seq
    }

    /// Recompute the confidence product from the recorded hops.
    pub fn recompute_cr2(&self) -> f64 {
        self.hops.iter().map(|h| h.vote.cr1).product()
    }
}

/// Frontier bound for beam traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierConfig {
    /// Maximum number of concurrently tracked paths.
    pub fs: usize,
}

/// Complete paths (ran all requested hops) ranked by CR2 descending,
/// plus the partial paths that died early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Traversal {
    pub complete: Vec<PathTrace>,
    pub partial: Vec<PathTrace>,
}

/// Beam search over stored relations.
///
/// Runs exactly `depth` hops from `start`. At each hop, every frontier
/// path attempts every label in `relations`; a read that finds a winner
/// spawns a successor whose CR2 is the parent's times the read's CR1.
/// After each hop the frontier keeps the `fs` highest-CR2 paths (ties
/// break toward the smaller node-id sequence). Paths that cannot extend
/// are reported as partial. Errors with `NotFound` when no path
/// survives to the final hop.
pub fn traverse(
    mem: &BlockMemory,
    start: u64,
    relations: &[u64],
    depth: usize,
    frontier: FrontierConfig,
) -> Result<Traversal> {
    if relations.is_empty() {
        return Err(Error::ConfigInvalid("no candidate relations".into()));
    }
    if depth == 0 || frontier.fs == 0 {
        return Err(Error::ConfigInvalid("depth and fs must be >= 1".into()));
    }
    let dim = mem.config().input_len;

    #[derive(Clone)]
    struct Candidate {
        node: u64,
        trace: PathTrace,
    }

    let mut alive = vec![Candidate {
        node: start,
        trace: PathTrace {
            hops: Vec::new(),
            cr2: 1.0,
        },
    }];
    let mut partial = Vec::new();

    for _ in 0..depth {
        let mut successors: Vec<Candidate> = Vec::new();
        for cand in &alive {
            let mut extended = false;
            for &relation in relations {
                let key = relation_key(cand.node, relation, dim);
                match mem.read(&key) {
                    Ok(vote) => {
                        let next = vote.winner.expect("winning reads carry an entry").0;
                        let mut trace = cand.trace.clone();
                        trace.cr2 *= vote.cr1;
                        trace.hops.push(Hop {
                            node: cand.node,
                            relation,
                            vote,
                        });
                        successors.push(Candidate { node: next, trace });
                        extended = true;
                    }
                    Err(Error::NotFound) => {}
                    Err(other) => return Err(other),
                }
            }
            if !extended && !cand.trace.hops.is_empty() {
                partial.push(cand.trace.clone());
            }
        }
        successors.sort_by(|a, b| {
            b.trace
                .cr2
                .partial_cmp(&a.trace.cr2)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.trace.node_sequence().cmp(&b.trace.node_sequence()))
        });
        successors.truncate(frontier.fs);
        alive = successors;
        if alive.is_empty() {
            break;
        }
    }

    let mut complete: Vec<PathTrace> = alive
        .into_iter()
        .filter(|c| c.trace.hops.len() == depth)
        .map(|c| c.trace)
        .collect();
    complete.sort_by(|a, b| {
        b.cr2
            .partial_cmp(&a.cr2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.node_sequence().cmp(&b.node_sequence()))
    });
    if complete.is_empty() {
        return Err(Error::NotFound);
    }
    Ok(Traversal { complete, partial })
}

// ---------------------------------------------------------------------------
// Effective branching
// ---------------------------------------------------------------------------

/// Number of distinct CR2 equivalence classes among the traces.
///
/// Under Rescue every trace carries CR2 = 1 and the ranking is
/// degenerate, so this returns 1.0; with all-distinct confidences it
/// equals the trace count. Classes are split with a relative tolerance
/// so that products of the same vote fractions computed in different
/// hop orders are not counted twice.
pub fn effective_branching(traces: &[PathTrace]) -> f64 {
    assert!(!traces.is_empty(), "need at least one trace");
    let mut values: Vec<f64> = traces.iter().map(|t| t.cr2).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut classes = 1u64;
    for pair in values.windows(2) {
        let scale = pair[1].abs().max(f64::MIN_POSITIVE);
        if (pair[1] - pair[0]) / scale > 1e-12 {
            classes += 1;
        }
    }
    classes as f64
}

// ---------------------------------------------------------------------------
// Decay fitting
// ---------------------------------------------------------------------------

/// Mean confidence of the traces at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthGroup {
    pub depth: u32,
    pub mean_cr2: f64,
    pub n_traces: usize,
}

/// Group traces by hop count, averaging CR2 per depth. Partial paths
/// are the caller's concern; this sees only what it is given.
pub fn group_by_depth(traces: &[PathTrace]) -> Vec<DepthGroup> {
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for t in traces {
        let entry = sums.entry(t.depth() as u32).or_insert((0.0, 0));
        entry.0 += t.cr2;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(depth, (sum, n))| DepthGroup {
            depth,
            mean_cr2: sum / n as f64,
            n_traces: n,
        })
        .collect()
}

/// Least-squares fits of mean confidence against depth for three decay
/// shapes, with residual sums on the raw confidence scale so the models
/// are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of log(mean CR2) against depth (the multiplicative model).
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    pub rss_multiplicative: f64,
    /// `F = 1 - c * n` fit.
    pub additive_c: f64,
    pub rss_additive: f64,
    /// `F = c * n^(-a)` fit.
    pub power_c: f64,
    pub power_a: f64,
    pub rss_power: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit the decay of mean CR2 across depths.
///
/// Requires at least three distinct depths with positive means; errors
/// with `DegenerateFit` when every depth shares one mean.
pub fn decay_fit(groups: &[DepthGroup]) -> Result<DecayFit> {
    if groups.len() < 3 {
        return Err(Error::ConfigInvalid(format!(
            "need >= 3 distinct depths, got {}",
            groups.len()
        )));
    }
    if groups.iter().any(|g| g.mean_cr2 <= 0.0) {
        return Err(Error::ConfigInvalid(
            "all depth means must be positive".into(),
        ));
    }
    let first = groups[0].mean_cr2;
    if groups.iter().all(|g| g.mean_cr2 == first) && first == 1.0 {
        // Flat at 1.0 is the boundary case: slope 0, perfect fit.
        return Ok(DecayFit {
            slope: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
            rss_multiplicative: 0.0,
            additive_c: 0.0,
            rss_additive: 0.0,
            power_c: 1.0,
            power_a: 0.0,
            rss_power: 0.0,
        });
    }
    if groups.iter().all(|g| g.mean_cr2 == first) {
        return Err(Error::DegenerateFit);
    }

    let ns: Vec<f64> = groups.iter().map(|g| g.depth as f64).collect();
    let fs: Vec<f64> = groups.iter().map(|g| g.mean_cr2).collect();
    let logs: Vec<f64> = fs.iter().map(|f| f.ln()).collect();

    let (slope, intercept) = linear_fit(&ns, &logs);
    let my = logs.iter().sum::<f64>() / logs.len() as f64;
    let ss_tot: f64 = logs.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = ns
        .iter()
        .zip(&logs)
        .map(|(n, y)| {
            let e = y - (intercept + slope * n);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let rss_multiplicative: f64 = ns
        .iter()
        .zip(&fs)
        .map(|(n, f)| {
            let e = f - (intercept + slope * n).exp();
            e * e
        })
        .sum();

    // Additive F = 1 - c n, least squares through the (0, 1) anchor.
    let additive_c = ns
        .iter()
        .zip(&fs)
        .map(|(n, f)| n * (1.0 - f))
        .sum::<f64>()
        / ns.iter().map(|n| n * n).sum::<f64>();
    let rss_additive: f64 = ns
        .iter()
        .zip(&fs)
        .map(|(n, f)| {
            let e = f - (1.0 - additive_c * n);
            e * e
        })
        .sum();

    // Power law F = c n^(-a), fitted in log-log space.
    let log_ns: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let (neg_a, log_c) = linear_fit(&log_ns, &logs);
    let power_a = -neg_a;
    let power_c = log_c.exp();
    let rss_power: f64 = ns
        .iter()
        .zip(&fs)
        .map(|(n, f)| {
            let e = f - power_c * n.powf(-power_a);
            e * e
        })
        .sum();

    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        rss_multiplicative,
        additive_c,
        rss_additive,
        power_c,
        power_a,
        rss_power,
    })
}

/// CSV with columns `depth,mean_cr2,log_mean_cr2,n_traces`.
pub fn decay_csv(groups: &[DepthGroup]) -> String {
    let mut out = String::from("depth,mean_cr2,log_mean_cr2,n_traces\n");
    for g in groups {
        out.push_str(&format!(
            "{},{},{},{}\n",
            g.depth,
            g.mean_cr2,
            g.mean_cr2.ln(),
            g.n_traces
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{MemoryConfig, RrMode, VoteResult};
    use crate::gf2::{Generator, Residue};
    use crate::rng::CounterRng;

    fn memory(rr: RrMode) -> BlockMemory {
        // 8 blocks of 16-bit segments, 10-bit addresses.
        BlockMemory::new(MemoryConfig::unified(
            8,
            Generator::builtin(10).unwrap(),
            Residue::ZERO,
            rr,
            128,
        ))
        .unwrap()
    }

    fn synthetic_vote(votes: u32, n: u32, winner: u64) -> VoteResult {
        VoteResult {
            winner: Some(EntryAddress(winner)),
            votes_for_winner: votes,
            abstentions: n - votes,
            cr1: votes as f64 / n as f64,
            per_block: vec![],
            rescued: false,
        }
    }

    fn synthetic_trace(cr1s: &[(u32, u32)]) -> PathTrace {
        let hops: Vec<Hop> = cr1s
            .iter()
            .enumerate()
            .map(|(i, &(v, n))| Hop {
                node: i as u64,
                relation: 1,
                vote: synthetic_vote(v, n, i as u64 + 1),
            })
            .collect();
        let cr2 = hops.iter().map(|h| h.vote.cr1).product();
        PathTrace { hops, cr2 }
    }

    #[test]
    fn edge_text_round_trips() {
        let edges = vec![
            RelationRecord { subject: 1, relation: 2, object: 3 },
            RelationRecord { subject: 10, relation: 2, object: 30 },
        ];
        let text = format_edges(&edges);
        assert_eq!(text, "1\t2\t3\n10\t2\t30\n");
        assert_eq!(parse_edges(&text).unwrap(), edges);
        assert!(parse_edges("1\t2").is_err());
        assert!(parse_edges("1\t2\t3\t4").is_err());
        assert!(parse_edges("a\t2\t3").is_err());
        assert_eq!(parse_edges("").unwrap(), vec![]);
    }

    #[test]
    fn load_counts_writes() {
        let mut mem = memory(RrMode::Rescue);
        let report = load_edges(&mut mem, &[]).unwrap();
        assert_eq!(report.writes, 0);

        let chain = vec![
            RelationRecord { subject: 1, relation: 7, object: 2 },
            RelationRecord { subject: 2, relation: 7, object: 3 },
        ];
        let report = load_edges(&mut mem, &chain).unwrap();
        assert_eq!(report.writes, 2);
        assert_eq!(report.collided_writes, 0);
    }

    #[test]
    fn unbranched_chain_in_rescue_has_full_confidence() {
        let mut mem = memory(RrMode::Rescue);
        let chain = vec![
            RelationRecord { subject: 1, relation: 7, object: 2 },
            RelationRecord { subject: 2, relation: 7, object: 3 },
            RelationRecord { subject: 3, relation: 7, object: 4 },
        ];
        load_edges(&mut mem, &chain).unwrap();
        let result = traverse(&mem, 1, &[7], 3, FrontierConfig { fs: 4 }).unwrap();
        assert_eq!(result.complete.len(), 1);
        let trace = &result.complete[0];
        assert_eq!(trace.cr2, 1.0);
        assert_eq!(trace.terminal_node(), Some(4));
        assert_eq!(trace.node_sequence(), vec![1, 2, 3, 4]);
        assert_eq!(effective_branching(&result.complete), 1.0);
    }

    #[test]
    fn traversal_not_found_when_frontier_empties() {
        let mem = memory(RrMode::Rescue);
        assert_eq!(
            traverse(&mem, 1, &[7], 2, FrontierConfig { fs: 4 }),
            Err(Error::NotFound)
        );
    }

    #[test]
    fn branching_tree_enumerates_all_paths() {
        let mut mem = memory(RrMode::Rescue);
        // Binary tree of depth 3: labels 1 and 2, nodes numbered by
        // heap order (children of v are 2v and 2v+1).
        let mut edges = Vec::new();
        for v in 1u64..8 {
            edges.push(RelationRecord { subject: v, relation: 1, object: 2 * v });
            edges.push(RelationRecord { subject: v, relation: 2, object: 2 * v + 1 });
        }
        load_edges(&mut mem, &edges).unwrap();
        let result = traverse(&mem, 1, &[1, 2], 3, FrontierConfig { fs: 8 }).unwrap();
        assert_eq!(result.complete.len(), 8);
        let mut leaves: Vec<u64> = result
            .complete
            .iter()
            .map(|t| t.terminal_node().unwrap())
            .collect();
        leaves.sort_unstable();
        assert_eq!(leaves, (8..16).collect::<Vec<u64>>());
        // Rescue pins every confidence, and each emitted product is
        // recomputable from its hops bit-for-bit.
        assert!(result.complete.iter().all(|t| t.cr2 == 1.0));
        assert!(result.complete.iter().all(|t| t.cr2 == t.recompute_cr2()));
        assert_eq!(effective_branching(&result.complete), 1.0);
        // Degenerate confidences rank by node sequence.
        assert_eq!(result.complete[0].terminal_node(), Some(8));
    }

    #[test]
    fn beam_prunes_to_fs() {
        let mut mem = memory(RrMode::Rescue);
        let mut edges = Vec::new();
        for v in 1u64..8 {
            edges.push(RelationRecord { subject: v, relation: 1, object: 2 * v });
            edges.push(RelationRecord { subject: v, relation: 2, object: 2 * v + 1 });
        }
        load_edges(&mut mem, &edges).unwrap();
        let result = traverse(&mem, 1, &[1, 2], 3, FrontierConfig { fs: 3 }).unwrap();
        assert_eq!(result.complete.len(), 3);
    }

    #[test]
    fn cr2_is_the_exact_hop_product() {
        let trace = synthetic_trace(&[(10, 10), (9, 10), (9, 10)]);
        assert!((trace.cr2 - 0.81).abs() < 1e-12);
        assert_eq!(trace.cr2, trace.recompute_cr2());
    }

    #[test]
    fn appending_leaky_hops_contracts() {
        let mut trace = synthetic_trace(&[(10, 10)]);
        for _ in 0..10 {
            let before = trace.cr2;
            let hop = Hop {
                node: 0,
                relation: 1,
                vote: synthetic_vote(9, 10, 1),
            };
            trace.cr2 *= hop.vote.cr1;
            trace.hops.push(hop);
            assert!(trace.cr2 < before);
        }
    }

    #[test]
    fn effective_branching_class_counts() {
        let all_same: Vec<PathTrace> =
            (0..8).map(|_| synthetic_trace(&[(10, 10), (10, 10)])).collect();
        assert_eq!(effective_branching(&all_same), 1.0);

        let all_distinct: Vec<PathTrace> = (1..=8)
            .map(|v| synthetic_trace(&[(v, 10)]))
            .collect();
        assert_eq!(effective_branching(&all_distinct), 8.0);

        let two_classes: Vec<PathTrace> = (0..8)
            .map(|i| synthetic_trace(&[(if i < 4 { 10 } else { 9 }, 10)]))
            .collect();
        assert_eq!(effective_branching(&two_classes), 2.0);
        // 2 of 8 classes = 0.25 of the maximum.
        assert_eq!(
            effective_branching(&two_classes) / two_classes.len() as f64,
            0.25
        );
    }

    #[test]
    fn effective_branching_merges_reordered_products() {
        let a = synthetic_trace(&[(9, 10), (8, 10), (7, 10)]);
        let b = synthetic_trace(&[(7, 10), (8, 10), (9, 10)]);
        assert_eq!(effective_branching(&[a, b]), 1.0);
    }

    #[test]
    fn geometric_data_fits_exactly() {
        let groups: Vec<DepthGroup> = (1..=6)
            .map(|n| DepthGroup {
                depth: n,
                mean_cr2: 0.9f64.powi(n as i32),
                n_traces: 5,
            })
            .collect();
        let fit = decay_fit(&groups).unwrap();
        assert!((fit.slope - 0.9f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.rss_multiplicative < fit.rss_additive);
        assert!(fit.rss_multiplicative < fit.rss_power);
    }

    #[test]
    fn rescue_data_fits_with_zero_slope() {
        let groups: Vec<DepthGroup> = (1..=4)
            .map(|n| DepthGroup { depth: n, mean_cr2: 1.0, n_traces: 3 })
            .collect();
        let fit = decay_fit(&groups).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn degenerate_flat_data_is_rejected() {
        let groups: Vec<DepthGroup> = (1..=4)
            .map(|n| DepthGroup { depth: n, mean_cr2: 0.5, n_traces: 3 })
            .collect();
        assert_eq!(decay_fit(&groups), Err(Error::DegenerateFit));
        assert!(decay_fit(&groups[..2]).is_err());
    }

    #[test]
    fn heterogeneous_hops_recover_the_mean_log_confidence() {
        // Deterministic per-hop confidences v_i / 10; mean CR2 at depth
        // n is the exact running product, so the fitted slope estimates
        // the mean log confidence with the random-walk 3-sigma band.
        let depth = 24usize;
        let mut rng = CounterRng::new(123, 0);
        let logs: Vec<f64> = (0..depth)
            .map(|_| {
                let v = 7 + rng.next_below(4); // 7..=10 of 10
                (v as f64 / 10.0).ln()
            })
            .collect();
        let mut running = 0.0;
        let groups: Vec<DepthGroup> = logs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                running += l;
                DepthGroup {
                    depth: (i + 1) as u32,
                    mean_cr2: running.exp(),
                    n_traces: 1,
                }
            })
            .collect();
        let fit = decay_fit(&groups).unwrap();
        let mean_log = logs.iter().sum::<f64>() / depth as f64;
        let var_log =
            logs.iter().map(|l| (l - mean_log) * (l - mean_log)).sum::<f64>() / depth as f64;
        // Var of the LS slope when y_n is a random walk of the hop logs.
        let ns: Vec<f64> = (1..=depth).map(|n| n as f64).collect();
        let nbar = ns.iter().sum::<f64>() / depth as f64;
        let sxx: f64 = ns.iter().map(|n| (n - nbar) * (n - nbar)).sum();
        let weights: Vec<f64> = ns.iter().map(|n| (n - nbar) / sxx).collect();
        let mut slope_var = 0.0;
        for (i, wi) in weights.iter().enumerate() {
            for (j, wj) in weights.iter().enumerate() {
                slope_var += wi * wj * ((i + 1).min(j + 1) as f64);
            }
        }
        slope_var *= var_log;
        let tol = 3.0 * slope_var.sqrt();
        assert!(
            (fit.slope - mean_log).abs() <= tol,
            "slope {} vs mean log {} (3 sigma = {tol})",
            fit.slope,
            mean_log
        );
    }

    #[test]
    fn per_hop_bernoulli_success_matches_the_product() {
        // Conditional-independence check: empirical full-sequence
        // success over many trials vs the product of per-hop rates.
        let ps = [0.95, 0.9, 0.85, 0.92];
        let product: f64 = ps.iter().product();
        let trials = 20_000u64;
        let mut successes = 0u64;
        let mut rng = CounterRng::new(2024, 0);
        for _ in 0..trials {
            if ps.iter().all(|&p| rng.next_f64() < p) {
                successes += 1;
            }
        }
        let rate = successes as f64 / trials as f64;
        let sigma = (product * (1.0 - product) / trials as f64).sqrt();
        assert!(
            (rate - product).abs() <= 3.0 * sigma,
            "rate {rate} vs product {product}"
        );
    }

    #[test]
    fn decay_csv_shape() {
        let groups = vec![DepthGroup { depth: 1, mean_cr2: 0.9, n_traces: 4 }];
        let csv = decay_csv(&groups);
        assert!(csv.starts_with("depth,mean_cr2,log_mean_cr2,n_traces\n"));
        assert!(csv.contains("1,0.9,"));
    }
}
