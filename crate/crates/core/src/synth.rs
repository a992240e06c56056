//! Synthetic workloads: labeled trees, random write loads, and
//! controlled single-block abstention injection.
//!
//! The tree generator is the desk-scale stand-in for large relational
//! benchmarks: a root spawning `b` children per node down to a fixed
//! depth, each child reached by a distinct relation label so traversal
//! branches over candidate labels rather than colliding on one key.
//!
//! Abstention injection manufactures a genuine block collision for a
//! chosen key: a second input whose target-block segment differs by a
//! multiple of that block's generator (same residue, same address) and
//! whose other segments are redrawn until they land in empty slots. In
//! Don't Care mode the conflicting write poisons exactly the target
//! block, lowering the key's CR1 from 1 to (N-1)/N.

use crate::error::{Error, Result};
use crate::gf2::BitPolynomial;
use crate::memory::{BlockMemory, EntryAddress, RrMode, Slot};
use crate::reasoner::RelationRecord;
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

/// Parameters of the synthetic labeled tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    /// Children (and distinct labels) per internal node.
    pub branching: u32,
    /// Hops from root to leaf.
    pub depth: u32,
}

impl TreeSpec {
    /// Root node id. Children of node v are `b*v - (b-2) .. b*v + 1`
    /// under sequential numbering; we simply number breadth-first.
    pub const ROOT: u64 = 1;

    pub fn label_set(&self) -> Vec<u64> {
        (1..=self.branching as u64).collect()
    }

    pub fn path_count(&self) -> u64 {
        (self.branching as u64).pow(self.depth)
    }
}

/// Breadth-first labeled tree; child `c` of a node hangs off label
/// `c + 1`. Node ids are assigned 1, 2, 3, ... level by level.
pub fn generate_tree(spec: &TreeSpec) -> Vec<RelationRecord> {
    let b = spec.branching as u64;
    let mut edges = Vec::new();
    let mut level = vec![TreeSpec::ROOT];
    let mut next_id = 2u64;
    for _ in 0..spec.depth {
        let mut next_level = Vec::with_capacity(level.len() * b as usize);
        for &node in &level {
            for label in 1..=b {
                edges.push(RelationRecord {
                    subject: node,
                    relation: label,
                    object: next_id,
                });
                next_level.push(next_id);
                next_id += 1;
            }
        }
        level = next_level;
    }
    edges
}

/// Synthetic traces with a constant per-hop vote fraction, one trace
/// per requested depth. Mean confidence at depth n is exactly
/// `(votes/n_blocks)^n`, which makes the log-decay fit exact.
pub fn constant_confidence_traces(
    votes: u32,
    n_blocks: u32,
    depths: &[u32],
) -> Vec<crate::reasoner::PathTrace> {
    assert!(votes >= 1 && votes <= n_blocks);
    let per_hop: Vec<(u32, u32)> = vec![(votes, n_blocks)];
    depths
        .iter()
        .map(|&d| {
            let hops: Vec<(u32, u32)> =
                per_hop.iter().cycle().take(d as usize).cloned().collect();
            chain_confidence_trace(&hops)
        })
        .collect()
}

/// One synthetic trace from an explicit per-hop (votes, blocks) list.
pub fn chain_confidence_trace(per_hop: &[(u32, u32)]) -> crate::reasoner::PathTrace {
    use crate::memory::VoteResult;
    use crate::reasoner::{Hop, PathTrace};
    let hops: Vec<Hop> = per_hop
        .iter()
        .enumerate()
        .map(|(i, &(votes, n))| {
            assert!(votes >= 1 && votes <= n);
            Hop {
                node: i as u64,
                relation: 1,
                vote: VoteResult {
                    winner: Some(EntryAddress(i as u64 + 1)),
                    votes_for_winner: votes,
                    abstentions: n - votes,
                    cr1: votes as f64 / n as f64,
                    per_block: Vec::new(),
                    rescued: false,
                },
            }
        })
        .collect();
    let cr2 = hops.iter().map(|h| h.vote.cr1).product();
    PathTrace { hops, cr2 }
}

/// `count` random (input, entry) pairs of the given input length.
/// Inputs are fresh draws; entries are sequential from 1.
pub fn random_write_workload(
    count: u64,
    input_len: usize,
    rng_seed: u64,
) -> Vec<(BitPolynomial, EntryAddress)> {
    let mut rng = CounterRng::new(rng_seed, 0);
    (0..count)
        .map(|i| {
            (
                BitPolynomial::random(input_len, &mut rng),
                EntryAddress(i + 1),
            )
        })
        .collect()
}

/// Poison exactly one block of `p`'s address set (Don't Care mode).
///
/// Writes a crafted conflicting input: its `block` segment is `p`'s
/// segment XOR a nonzero multiple of that block's generator, so it
/// diffuses to the same address; its other segments are redrawn until
/// every one lands in an empty slot at a different address than `p`
/// uses there. Returns the entry address of the injected write.
///
/// Requires the segment length to exceed the address degree (otherwise
/// the block's collision kernel is trivial) and Don't Care mode.
pub fn inject_block_abstention(
    mem: &mut BlockMemory,
    p: &BitPolynomial,
    block: usize,
    rng: &mut CounterRng,
) -> Result<EntryAddress> {
    let config = mem.config().clone();
    if config.rr_mode != RrMode::DontCare {
        return Err(Error::ConfigInvalid(
            "abstention injection needs Don't Care mode".into(),
        ));
    }
    if block >= config.n_blocks {
        return Err(Error::ConfigInvalid(format!(
            "block {block} out of range (N = {})",
            config.n_blocks
        )));
    }
    let q = config.segment_len();
    let m = config.address_bits as usize;
    if q <= m {
        return Err(Error::ConfigInvalid(format!(
            "segment length {q} must exceed address bits {m} for a nonzero kernel"
        )));
    }
    let p = p.zero_extend(config.input_len).unwrap_or_else(|_| p.clone());
    if p.len() != config.input_len {
        return Err(Error::LengthMismatch {
            expected: config.input_len,
            got: p.len(),
        });
    }
    let base_addrs = mem.addresses(&p)?;
    let modulus = config.generators[block].modulus();

    // Aliased segment: add G * Q for a random nonzero Q of degree < q - m.
    let aliased_segment = |rng: &mut CounterRng| -> BitPolynomial {
        let mut seg = p.segment(block * q, q);
        let quotient_bits = (q - m) as u64;
        let quotient = 1 + rng.next_below((1u64 << quotient_bits.min(63)) - 1);
        let mut product = 0u128;
        let mut shifted = modulus as u128;
        let mut rest = quotient;
        while rest != 0 {
            if rest & 1 == 1 {
                product ^= shifted;
            }
            shifted <<= 1;
            rest >>= 1;
        }
        for j in 0..q {
            if product >> j & 1 == 1 {
                seg.set(j, !seg.get(j));
            }
        }
        seg
    };

    for _attempt in 0..10_000 {
        let mut candidate = BitPolynomial::random(config.input_len, rng);
        let seg = aliased_segment(rng);
        for j in 0..q {
            candidate.set(block * q + j, seg.get(j));
        }
        let addrs = mem.addresses(&candidate)?;
        debug_assert_eq!(addrs[block], base_addrs[block], "kernel alias must hold");
        let clean = (0..config.n_blocks).all(|b| {
            b == block
                || (addrs[b] != base_addrs[b] && mem.slot(b, addrs[b]) == Slot::Empty)
        });
        if clean {
            let ea = EntryAddress(0x8000_0000_0000_0000 | rng.next_u64() >> 1);
            mem.write(&candidate, ea)?;
            return Ok(ea);
        }
    }
    Err(Error::ConfigInvalid(
        "could not place an injection without collateral; memory too full".into(),
    ))
}
