//! Block-partitioned majority-vote storage.
//!
//! An input of length L is split into N contiguous segments of q = L/N
//! bits. Each block diffuses its segment through its own generator and
//! seed into an m-bit address and stores an opaque Entry Address there.
//! A read tallies per-block votes; the winner's vote share is the
//! per-read confidence CR1 = votes / N.
//!
//! Two collision policies:
//!
//! - Rescue: a conflicting write leaves the slot with its original
//!   holder and records the full input in an exact-match side table.
//!   Reads whose blocks disagree or abstain consult the table; a hit
//!   repairs the result and pins CR1 to 1.0.
//! - Don't Care: a conflicting write poisons the slot; poisoned blocks
//!   abstain from voting, letting CR1 fall below 1.

use crate::error::{Error, Result};
use crate::gf2::{diffuse, BitPolynomial, Generator, Residue};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Practical upper bound on address bits: 2^28 slots per block.
pub const MAX_ADDRESS_BITS: u32 = 28;

/// Collision policy flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RrMode {
    Rescue,
    DontCare,
}

/// Diffusion schedule: one shared generator and seed, or per-block
/// generators with reseeding allowed between events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Unified,
    Gated,
}

/// Opaque 64-bit identifier stored in slots; equality is bitwise and
/// the numeric order is the deterministic tie-break at readout.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct EntryAddress(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Empty,
    Holds(EntryAddress),
    Poisoned,
}

/// Static configuration of a block memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub n_blocks: usize,
    /// Address bits per block (degree of every generator).
    pub address_bits: u32,
    pub generators: Vec<Generator>,
    /// Initial per-block seeds.
    pub seeds: Vec<Residue>,
    pub rr_mode: RrMode,
    pub schedule: Schedule,
    /// Total input length L; each block consumes L / N bits.
    pub input_len: usize,
    /// Rescue reads consult the side table on every read, not only when
    /// votes disagree or a block abstains.
    #[serde(default)]
    pub rescue_always: bool,
}

impl MemoryConfig {
    /// Unified schedule: every block shares `generator` and `seed`.
    pub fn unified(
        n_blocks: usize,
        generator: Generator,
        seed: Residue,
        rr_mode: RrMode,
        input_len: usize,
    ) -> Self {
        MemoryConfig {
            n_blocks,
            address_bits: generator.degree(),
            generators: vec![generator; n_blocks],
            seeds: vec![seed; n_blocks],
            rr_mode,
            schedule: Schedule::Unified,
            input_len,
            rescue_always: false,
        }
    }

    /// Gated schedule with one generator per block and per-block seeds
    /// derived from `seed_word`.
    pub fn gated(
        n_blocks: usize,
        generators: Vec<Generator>,
        rr_mode: RrMode,
        input_len: usize,
        seed_word: u64,
    ) -> Self {
        let address_bits = generators.first().map(|g| g.degree()).unwrap_or(0);
        let mask = if address_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << address_bits) - 1
        };
        let seeds = (0..n_blocks as u64)
            .map(|b| Residue(crate::rng::CounterRng::new(seed_word, b).word_at(0) & mask))
            .collect();
        MemoryConfig {
            n_blocks,
            address_bits,
            generators,
            seeds,
            rr_mode,
            schedule: Schedule::Gated,
            input_len,
            rescue_always: false,
        }
    }

    /// Segment length q = L / N.
    pub fn segment_len(&self) -> usize {
        self.input_len / self.n_blocks
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0 {
            return Err(Error::ConfigInvalid("need at least one block".into()));
        }
        if self.generators.len() != self.n_blocks || self.seeds.len() != self.n_blocks {
            return Err(Error::ConfigInvalid(format!(
                "expected {} generators and seeds, got {} and {}",
                self.n_blocks,
                self.generators.len(),
                self.seeds.len()
            )));
        }
        if self.address_bits < 2 || self.address_bits > MAX_ADDRESS_BITS {
            return Err(Error::ConfigInvalid(format!(
                "address bits {} outside [2, {MAX_ADDRESS_BITS}]",
                self.address_bits
            )));
        }
        for g in &self.generators {
            if g.degree() != self.address_bits {
                return Err(Error::ConfigInvalid(format!(
                    "generator 0x{:x} has degree {}, expected {}",
                    g.modulus(),
                    g.degree(),
                    self.address_bits
                )));
            }
            if !g.primitive_verified() {
                return Err(Error::UnverifiedGenerator {
                    modulus: g.modulus(),
                    degree: g.degree(),
                });
            }
        }
        if self.schedule == Schedule::Unified {
            let g0 = self.generators[0];
            let s0 = self.seeds[0];
            if !self.generators.iter().all(|g| *g == g0) || !self.seeds.iter().all(|s| *s == s0) {
                return Err(Error::ConfigInvalid(
                    "unified schedule requires one shared generator and seed".into(),
                ));
            }
        }
        if self.input_len == 0 || !self.input_len.is_multiple_of(self.n_blocks) {
            return Err(Error::LengthMismatch {
                expected: self.n_blocks * self.segment_len().max(1),
                got: self.input_len,
            });
        }
        let mask = (1u64 << self.address_bits) - 1;
        for s in &self.seeds {
            if s.bits() & !mask != 0 {
                return Err(Error::ConfigInvalid(format!(
                    "seed {:x} wider than {} bits",
                    s.bits(),
                    self.address_bits
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one write.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteReport {
    /// Blocks whose slot already held a different entry (or was poisoned).
    pub collided_blocks: Vec<usize>,
    /// Whether the input was recorded in the rescue table.
    pub rescued: bool,
}

/// Outcome of one read.
///
/// `per_block` keeps the raw slot votes for audit. On a rescue repair
/// the reported tallies are pinned (`votes_for_winner = N`,
/// `abstentions = 0`, `cr1 = 1.0`) while `per_block` stays raw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub winner: Option<EntryAddress>,
    pub votes_for_winner: u32,
    pub abstentions: u32,
    /// Winner vote share: votes_for_winner / N.
    pub cr1: f64,
    pub per_block: Vec<Option<EntryAddress>>,
    pub rescued: bool,
}

/// N addressable stores of 2^m slots each with majority-vote readout.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMemory {
    config: MemoryConfig,
    /// Current per-block seeds (diverge from config under reseeding).
    seeds: Vec<Residue>,
    slots: Vec<Vec<Slot>>,
    rescue: BTreeMap<Vec<u8>, EntryAddress>,
}

impl BlockMemory {
    /// Empty memory: all slots empty, rescue table empty.
    pub fn new(config: MemoryConfig) -> Result<Self> {
        config.validate()?;
        let slots_per_block = 1usize << config.address_bits;
        let slots = vec![vec![Slot::Empty; slots_per_block]; config.n_blocks];
        Ok(BlockMemory {
            seeds: config.seeds.clone(),
            slots,
            rescue: BTreeMap::new(),
            config,
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn current_seeds(&self) -> &[Residue] {
        &self.seeds
    }

    pub fn rescue_len(&self) -> usize {
        self.rescue.len()
    }

    pub fn rescue_entries(&self) -> impl Iterator<Item = (&Vec<u8>, &EntryAddress)> {
        self.rescue.iter()
    }

    pub(crate) fn slot(&self, block: usize, addr: usize) -> Slot {
        self.slots[block][addr]
    }

    pub(crate) fn restore(
        config: MemoryConfig,
        seeds: Vec<Residue>,
        slots: Vec<Vec<Slot>>,
        rescue: BTreeMap<Vec<u8>, EntryAddress>,
    ) -> Result<Self> {
        config.validate()?;
        if seeds.len() != config.n_blocks || slots.len() != config.n_blocks {
            return Err(Error::ConfigInvalid("restored shape mismatch".into()));
        }
        Ok(BlockMemory {
            config,
            seeds,
            slots,
            rescue,
        })
    }

    /// Pad a short input up to L; longer inputs are rejected.
    fn normalize(&self, p: &BitPolynomial) -> Result<BitPolynomial> {
        if p.len() > self.config.input_len {
            return Err(Error::LengthMismatch {
                expected: self.config.input_len,
                got: p.len(),
            });
        }
        p.zero_extend(self.config.input_len)
    }

    /// Per-block addresses of an input under the current seeds.
    pub fn addresses(&self, p: &BitPolynomial) -> Result<Vec<usize>> {
        let p = self.normalize(p)?;
        let q = self.config.segment_len();
        (0..self.config.n_blocks)
            .map(|b| {
                let segment = p.segment(b * q, q);
                let addr = diffuse(&segment, &self.config.generators[b], self.seeds[b])?;
                Ok(addr.bits() as usize)
            })
            .collect()
    }

    /// Store `ea` at the addressed slot of every block.
    ///
    /// Re-writing an identical (input, entry) pair is idempotent. A slot
    /// holding a different entry is a collision: Rescue leaves the slot
    /// and records the input in the side table, Don't Care poisons it.
    pub fn write(&mut self, p: &BitPolynomial, ea: EntryAddress) -> Result<WriteReport> {
        let addrs = self.addresses(p)?;
        let mut collided = Vec::new();
        for (b, &addr) in addrs.iter().enumerate() {
            let slot = &mut self.slots[b][addr];
            match *slot {
                Slot::Empty => *slot = Slot::Holds(ea),
                Slot::Holds(existing) if existing == ea => {}
                Slot::Holds(_) => {
                    collided.push(b);
                    if self.config.rr_mode == RrMode::DontCare {
                        *slot = Slot::Poisoned;
                    }
                }
                Slot::Poisoned => collided.push(b),
            }
        }
        let mut rescued = false;
        if self.config.rr_mode == RrMode::Rescue && !collided.is_empty() {
            let key = self.normalize(p)?.to_bytes();
            self.rescue.insert(key, ea);
            rescued = true;
        }
        Ok(WriteReport {
            collided_blocks: collided,
            rescued,
        })
    }

    /// Majority-vote read with CR1 confidence.
    ///
    /// Empty and poisoned slots abstain. Ties break toward the smallest
    /// entry address. In Rescue mode the side table is consulted when
    /// votes disagree or any block abstains (always, if `rescue_always`
    /// is set); a hit pins the result to the recorded entry with
    /// CR1 = 1.0. Errors with `NotFound` when no block votes and no
    /// rescue hit exists.
    pub fn read(&self, p: &BitPolynomial) -> Result<VoteResult> {
        let addrs = self.addresses(p)?;
        let n = self.config.n_blocks as u32;
        let per_block: Vec<Option<EntryAddress>> = addrs
            .iter()
            .enumerate()
            .map(|(b, &addr)| match self.slots[b][addr] {
                Slot::Holds(ea) => Some(ea),
                Slot::Empty | Slot::Poisoned => None,
            })
            .collect();

        let mut tally: BTreeMap<EntryAddress, u32> = BTreeMap::new();
        for ea in per_block.iter().flatten() {
            *tally.entry(*ea).or_insert(0) += 1;
        }
        let abstentions = per_block.iter().filter(|v| v.is_none()).count() as u32;

        if self.config.rr_mode == RrMode::Rescue {
            let needs_rescue = self.config.rescue_always || abstentions > 0 || tally.len() > 1;
            if needs_rescue {
                let key = self.normalize(p)?.to_bytes();
                if let Some(&ea) = self.rescue.get(&key) {
                    return Ok(VoteResult {
                        winner: Some(ea),
                        votes_for_winner: n,
                        abstentions: 0,
                        cr1: 1.0,
                        per_block,
                        rescued: true,
                    });
                }
            }
        }

        // Highest tally wins; among equal tallies the smallest entry
        // address (BTreeMap iterates ascending, strict > keeps the first).
        let mut winner: Option<(EntryAddress, u32)> = None;
        for (&ea, &votes) in &tally {
            if winner.is_none_or(|(_, best)| votes > best) {
                winner = Some((ea, votes));
            }
        }
        match winner {
            None => Err(Error::NotFound),
            Some((ea, votes)) => Ok(VoteResult {
                winner: Some(ea),
                votes_for_winner: votes,
                abstentions,
                cr1: votes as f64 / n as f64,
                per_block,
                rescued: false,
            }),
        }
    }

    /// Replace one block's diffusion seed (gated schedule only).
    ///
    /// Slots written under the old seed are not rehashed; their codes
    /// become unreachable for fresh inputs, which is the point of
    /// minting a new orthogonal code per event.
    pub fn reseed(&mut self, block: usize, new_seed: Residue) -> Result<()> {
        if self.config.schedule != Schedule::Gated {
            return Err(Error::ScheduleViolation);
        }
        if block >= self.config.n_blocks {
            return Err(Error::ConfigInvalid(format!(
                "block {block} out of range (N = {})",
                self.config.n_blocks
            )));
        }
        let mask = (1u64 << self.config.address_bits) - 1;
        if new_seed.bits() & !mask != 0 {
            return Err(Error::ConfigInvalid(format!(
                "seed {:x} wider than {} bits",
                new_seed.bits(),
                self.config.address_bits
            )));
        }
        self.seeds[block] = new_seed;
        Ok(())
    }

    /// (empty, held, poisoned) counts across all blocks.
    pub fn occupancy(&self) -> (u64, u64, u64) {
        let mut counts = (0u64, 0u64, 0u64);
        for block in &self.slots {
            for slot in block {
                match slot {
                    Slot::Empty => counts.0 += 1,
                    Slot::Holds(_) => counts.1 += 1,
                    Slot::Poisoned => counts.2 += 1,
                }
            }
        }
        counts
    }

    pub(crate) fn slots_raw(&self) -> &Vec<Vec<Slot>> {
        &self.slots
    }
}
