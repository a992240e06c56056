//! Dual-scaffold counterfactual estimation.
//!
//! A query runs the three-step do-operator recipe on two stores:
//!
//! 1. Abduction: the factual scaffold is keyed by evidence bindings;
//!    the winning record's background role is unbound and cleaned up.
//! 2. Action: the record's intervened binding is severed and replaced
//!    (exact surgery on the component list), and a transient
//!    counterfactual scaffold is built with per-block seeds distinct
//!    from the factual ones, loaded with the intervened mechanisms.
//! 3. Prediction: the mechanism chain is traversed in the
//!    counterfactual scaffold from the abducted background value.
//!
//! The estimate is the ratio of the two traversals' CR2 values, which
//! normalizes the confidence for depth when the chains are comparable;
//! unequal depths are reported with a warning and no correction.

use crate::error::{Error, Result};
use crate::gf2::{Generator, Residue};
use crate::hdc::{bind, bundle, unbind, Codebook, Hypervector};
use crate::memory::{BlockMemory, MemoryConfig, RrMode, Schedule};
use crate::reasoner::{load_edges, traverse, FrontierConfig, PathTrace, RelationRecord};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use crate::memory::EntryAddress;

// ---------------------------------------------------------------------------
// Query format
// ---------------------------------------------------------------------------

/// One value-level structural edge: `cause --label--> effect`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mechanism {
    pub cause: String,
    pub label: String,
    pub effect: String,
}

/// Store geometry for a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfMemoryParams {
    #[serde(default = "default_blocks")]
    pub n_blocks: usize,
    #[serde(default = "default_address_bits")]
    pub address_bits: u32,
    #[serde(default = "default_segment_len")]
    pub segment_len: usize,
    #[serde(default = "default_rr")]
    pub rr_mode: RrMode,
    #[serde(default)]
    pub seed: u64,
}

fn default_blocks() -> usize {
    10
}
fn default_address_bits() -> u32 {
    10
}
fn default_segment_len() -> usize {
    16
}
fn default_rr() -> RrMode {
    RrMode::Rescue
}

impl Default for CfMemoryParams {
    fn default() -> Self {
        CfMemoryParams {
            n_blocks: default_blocks(),
            address_bits: default_address_bits(),
            segment_len: default_segment_len(),
            rr_mode: default_rr(),
            seed: 0,
        }
    }
}

/// A counterfactual query: observed evidence, the intervention, the
/// structural mechanisms, and the role carried by each value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfQuery {
    /// Observed role -> value assignments.
    pub evidence: BTreeMap<String, String>,
    /// Role -> forced value (exactly one entry).
    pub intervention: BTreeMap<String, String>,
    pub mechanisms: Vec<Mechanism>,
    /// Value -> role lookup for every value in play.
    pub roles: BTreeMap<String, String>,
    #[serde(default = "default_background")]
    pub background_role: String,
    #[serde(default)]
    pub memory: CfMemoryParams,
}

fn default_background() -> String {
    "U".to_string()
}

/// Wire shape of a query's answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfResponse {
    pub u_hat: String,
    pub y_hat: String,
    pub ratio: f64,
    pub factual_cr2: f64,
    pub counterfactual_cr2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_warning: Option<String>,
}

// ---------------------------------------------------------------------------
// World records
// ---------------------------------------------------------------------------

/// A bundled role-filler representation of one world; each role appears
/// at most once. The component list is kept so that surgery on one role
/// is exact and every other binding re-enters the bundle unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldRecord {
    components: BTreeMap<String, String>,
    hv: Hypervector,
}

impl WorldRecord {
    pub fn build(book: &Codebook, components: BTreeMap<String, String>) -> Result<WorldRecord> {
        let bound: Vec<Hypervector> = components
            .iter()
            .map(|(role, value)| {
                let r = book
                    .get(role)
                    .ok_or_else(|| Error::RoleAbsent(role.clone()))?;
                let v = book
                    .get(value)
                    .ok_or_else(|| Error::Parse(format!("unregistered value {value:?}")))?;
                bind(r, v)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Hypervector> = bound.iter().collect();
        Ok(WorldRecord {
            components,
            hv: bundle(&refs)?,
        })
    }

    pub fn hv(&self) -> &Hypervector {
        &self.hv
    }

    pub fn components(&self) -> &BTreeMap<String, String> {
        &self.components
    }

    pub fn filler(&self, role: &str) -> Option<&String> {
        self.components.get(role)
    }

    /// Unbind a role from the bundle and restore the nearest atom.
    pub fn query_role(&self, book: &Codebook, role: &str) -> Result<(String, u32)> {
        let r = book
            .get(role)
            .ok_or_else(|| Error::RoleAbsent(role.to_string()))?;
        book.cleanup(&unbind(&self.hv, r)?)
    }
}

/// Sever one role's binding and bundle in the replacement; every other
/// component re-enters bit-identically.
pub fn intervene(
    book: &Codebook,
    record: &WorldRecord,
    role: &str,
    new_value: &str,
) -> Result<WorldRecord> {
    if !record.components.contains_key(role) {
        return Err(Error::RoleAbsent(role.to_string()));
    }
    let mut components = record.components.clone();
    components.insert(role.to_string(), new_value.to_string());
    WorldRecord::build(book, components)
}

// ---------------------------------------------------------------------------
// Scaffolds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScaffoldRole {
    Factual,
    Counterfactual,
}

/// One world in the factual scaffold: the record plus its chain order.
#[derive(Debug, Clone)]
pub struct World {
    pub record: WorldRecord,
    /// (role, value) pairs in mechanism order, background first.
    pub chain: Vec<(String, String)>,
}

/// A block memory plus the codebook and worlds that index it.
pub struct Scaffold {
    pub role: ScaffoldRole,
    pub store: BlockMemory,
    pub codebook: Codebook,
    pub worlds: Vec<World>,
    mechanism_labels: Vec<u64>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable node id of a value name.
pub fn value_id(name: &str) -> u64 {
    fnv1a64(name.as_bytes())
}

/// Stable relation id of a mechanism label.
pub fn label_id(name: &str) -> u64 {
    fnv1a64(name.as_bytes())
}

fn seed_mask(address_bits: u32) -> u64 {
    (1u64 << address_bits) - 1
}

/// Walk the mechanism graph from a background value, collecting the
/// (role, value) chain. Each value may drive at most one mechanism.
fn derive_chain(
    start: &str,
    mechanisms: &[Mechanism],
    roles: &BTreeMap<String, String>,
) -> Result<Vec<(String, String)>> {
    let role_of = |value: &str| -> Result<String> {
        roles
            .get(value)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("no role declared for value {value:?}")))
    };
    let mut chain = vec![(role_of(start)?, start.to_string())];
    let mut current = start.to_string();
    loop {
        let outgoing: Vec<&Mechanism> =
            mechanisms.iter().filter(|m| m.cause == current).collect();
        match outgoing.len() {
            0 => break,
            1 => {
                let next = &outgoing[0].effect;
                let role = role_of(next)?;
                if chain.iter().any(|(r, _)| *r == role) {
                    return Err(Error::ConfigInvalid(format!(
                        "role {role:?} appears twice along the chain from {start:?}"
                    )));
                }
                chain.push((role, next.clone()));
                current = next.clone();
            }
            _ => {
                return Err(Error::ConfigInvalid(format!(
                    "value {current:?} drives {} mechanisms; chains must be deterministic",
                    outgoing.len()
                )))
            }
        }
    }
    Ok(chain)
}

fn evidence_key(
    book: &Codebook,
    evidence: &BTreeMap<String, String>,
) -> Result<crate::gf2::BitPolynomial> {
    let mut key: Option<Hypervector> = None;
    for (role, value) in evidence {
        let r = book
            .get(role)
            .ok_or_else(|| Error::RoleAbsent(role.clone()))?;
        let v = book
            .get(value)
            .ok_or_else(|| Error::Parse(format!("unregistered value {value:?}")))?;
        let pair = bind(r, v)?;
        key = Some(match key {
            None => pair,
            Some(k) => bind(&k, &pair)?,
        });
    }
    key.map(|k| k.to_polynomial())
        .ok_or_else(|| Error::ConfigInvalid("empty evidence".into()))
}

impl Scaffold {
    /// Build the factual scaffold: mint atoms, derive one world per
    /// background value, store each world under its evidence key, and
    /// load the factual mechanism edges.
    pub fn factual(query: &CfQuery) -> Result<Scaffold> {
        let params = query.memory;
        let dim = params.n_blocks * params.segment_len;
        let generator = Generator::builtin(params.address_bits)?;
        let seed = Residue(CounterRng::new(params.seed, 0).word_at(0) & seed_mask(params.address_bits));
        let config = MemoryConfig::unified(
            params.n_blocks,
            generator,
            seed,
            params.rr_mode,
            dim,
        );
        let mut store = BlockMemory::new(config)?;

        let mut names: Vec<String> = query.roles.values().cloned().collect();
        names.extend(query.roles.keys().cloned());
        names.push(query.background_role.clone());
        let codebook = Codebook::with_names(dim, names);

        // Distinct value names must not alias the same node id.
        let mut ids: BTreeMap<u64, &String> = BTreeMap::new();
        for value in query.roles.keys() {
            if let Some(prev) = ids.insert(value_id(value), value) {
                return Err(Error::ConfigInvalid(format!(
                    "value id collision between {prev:?} and {value:?}"
                )));
            }
        }

        let mut worlds = Vec::new();
        for (value, role) in &query.roles {
            if role == &query.background_role {
                let chain = derive_chain(value, &query.mechanisms, &query.roles)?;
                let components: BTreeMap<String, String> = chain.iter().cloned().collect();
                let record = WorldRecord::build(&codebook, components)?;
                worlds.push(World { record, chain });
            }
        }
        if worlds.is_empty() {
            return Err(Error::ConfigInvalid(
                "no background values; nothing to abduce".into(),
            ));
        }
        let evidence_roles: Vec<&String> = query.evidence.keys().collect();
        for (index, world) in worlds.iter().enumerate() {
            let observed: BTreeMap<String, String> = evidence_roles
                .iter()
                .filter_map(|role| {
                    world
                        .record
                        .filler(role)
                        .map(|v| ((*role).clone(), v.clone()))
                })
                .collect();
            if observed.len() != evidence_roles.len() {
                continue; // world does not realize every evidence role
            }
            let key = evidence_key(&codebook, &observed)?;
            store.write(&key, EntryAddress(index as u64 + 1))?;
        }

        let edges: Vec<RelationRecord> = query
            .mechanisms
            .iter()
            .map(|m| RelationRecord {
                subject: value_id(&m.cause),
                relation: label_id(&m.label),
                object: value_id(&m.effect),
            })
            .collect();
        load_edges(&mut store, &edges)?;

        let mut mechanism_labels: Vec<u64> =
            query.mechanisms.iter().map(|m| label_id(&m.label)).collect();
        mechanism_labels.sort_unstable();
        mechanism_labels.dedup();

        Ok(Scaffold {
            role: ScaffoldRole::Factual,
            store,
            codebook,
            worlds,
            mechanism_labels,
        })
    }

    /// Transient counterfactual scaffold: same geometry, gated schedule,
    /// per-block seeds guaranteed distinct from this scaffold's, loaded
    /// with the intervened mechanism set.
    pub fn counterfactual(
        &self,
        query: &CfQuery,
        u_hat: &str,
        intervened_role: &str,
        new_value: &str,
    ) -> Result<Scaffold> {
        let params = query.memory;
        let dim = params.n_blocks * params.segment_len;
        let mask = seed_mask(params.address_bits);
        let own = self.store.current_seeds();
        let seeds: Vec<Residue> = (0..params.n_blocks as u64)
            .map(|b| {
                let rng = CounterRng::new(params.seed ^ 0x00cf_00cf_00cf_00cf, b);
                let mut i = 0;
                loop {
                    let candidate = Residue(rng.word_at(i) & mask);
                    if candidate != own[b as usize] {
                        break candidate;
                    }
                    i += 1;
                }
            })
            .collect();
        let config = MemoryConfig {
            n_blocks: params.n_blocks,
            address_bits: params.address_bits,
            generators: vec![Generator::builtin(params.address_bits)?; params.n_blocks],
            seeds,
            rr_mode: params.rr_mode,
            schedule: Schedule::Gated,
            input_len: dim,
            rescue_always: false,
        };
        let mut store = BlockMemory::new(config)?;

        // Surgery on the mechanism set: drop every edge producing the
        // intervened role, add the constant assignment from the
        // abducted background under the same label.
        let produces_intervened = |m: &Mechanism| {
            query.roles.get(&m.effect).map(String::as_str) == Some(intervened_role)
        };
        let mut replaced_labels: Vec<&str> = query
            .mechanisms
            .iter()
            .filter(|m| produces_intervened(m))
            .map(|m| m.label.as_str())
            .collect();
        replaced_labels.sort_unstable();
        replaced_labels.dedup();
        if replaced_labels.len() != 1 {
            return Err(Error::ConfigInvalid(format!(
                "expected one mechanism label producing role {intervened_role:?}, found {}",
                replaced_labels.len()
            )));
        }
        let mut edges: Vec<RelationRecord> = query
            .mechanisms
            .iter()
            .filter(|m| !produces_intervened(m))
            .map(|m| RelationRecord {
                subject: value_id(&m.cause),
                relation: label_id(&m.label),
                object: value_id(&m.effect),
            })
            .collect();
        edges.push(RelationRecord {
            subject: value_id(u_hat),
            relation: label_id(replaced_labels[0]),
            object: value_id(new_value),
        });
        load_edges(&mut store, &edges)?;

        Ok(Scaffold {
            role: ScaffoldRole::Counterfactual,
            store,
            codebook: self.codebook.clone(),
            worlds: Vec::new(),
            mechanism_labels: self.mechanism_labels.clone(),
        })
    }

    pub fn mechanism_labels(&self) -> &[u64] {
        &self.mechanism_labels
    }
}

// ---------------------------------------------------------------------------
// The three steps and the estimator
// ---------------------------------------------------------------------------

/// Result of the abduction step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Abduction {
    pub u_hat: String,
    /// Cleanup distance of the unbound background vector.
    pub distance: u32,
    /// CR1 of the evidence retrieval.
    pub cr1: f64,
    pub world_index: usize,
}

/// Retrieve the world matching the evidence and unbind its background.
pub fn abduce(pi_a: &Scaffold, evidence: &BTreeMap<String, String>) -> Result<Abduction> {
    let key = evidence_key(&pi_a.codebook, evidence)?;
    let vote = pi_a.store.read(&key).map_err(|e| match e {
        Error::NotFound => Error::AbductionFailed,
        other => other,
    })?;
    let ea = vote.winner.ok_or(Error::AbductionFailed)?;
    let world_index = (ea.0 as usize)
        .checked_sub(1)
        .filter(|&i| i < pi_a.worlds.len())
        .ok_or(Error::AbductionFailed)?;
    let world = &pi_a.worlds[world_index];
    let background_role = world
        .chain
        .first()
        .map(|(role, _)| role.clone())
        .ok_or(Error::AbductionFailed)?;
    let (u_hat, distance) = world.record.query_role(&pi_a.codebook, &background_role)?;
    Ok(Abduction {
        u_hat,
        distance,
        cr1: vote.cr1,
        world_index,
    })
}

/// Traverse the mechanism chain from the background value.
pub fn predict(pi: &Scaffold, u_hat: &str, depth: usize) -> Result<(String, PathTrace)> {
    let traversal = traverse(
        &pi.store,
        value_id(u_hat),
        &pi.mechanism_labels,
        depth,
        FrontierConfig { fs: 8 },
    )?;
    let best = traversal.complete.into_iter().next().ok_or(Error::NotFound)?;
    let terminal = best.terminal_node().ok_or(Error::NotFound)?;
    // Map the terminal node id back to its value name.
    let name = pi
        .codebook
        .names()
        .find(|n| value_id(n) == terminal)
        .cloned()
        .unwrap_or_else(|| format!("#{terminal:x}"));
    Ok((name, best))
}

/// `counterfactual.cr2 / factual.cr2`.
pub fn estimate(factual: &PathTrace, counterfactual: &PathTrace) -> Result<f64> {
    if factual.hops.is_empty() || counterfactual.hops.is_empty() {
        return Err(Error::ConfigInvalid("traces must be non-empty".into()));
    }
    if factual.cr2 == 0.0 {
        return Err(Error::DegenerateFactual);
    }
    Ok(counterfactual.cr2 / factual.cr2)
}

/// Everything a query run produces, for callers that want the traces.
pub struct CfRun {
    pub response: CfResponse,
    pub abduction: Abduction,
    pub intervened_record: WorldRecord,
    pub factual_trace: PathTrace,
    pub counterfactual_trace: PathTrace,
}

/// Which counterfactual hop to sabotage with a single-block abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectAbstention {
    pub hop: usize,
}

/// Run the full three-step estimator for a query.
pub fn run_query(
    pi_a: &Scaffold,
    query: &CfQuery,
    inject: Option<InjectAbstention>,
) -> Result<CfRun> {
    let (intervened_role, new_value) = query
        .intervention
        .iter()
        .next()
        .ok_or_else(|| Error::ConfigInvalid("empty intervention".into()))?;
    if query.intervention.len() != 1 {
        return Err(Error::ConfigInvalid(
            "exactly one intervened role is supported".into(),
        ));
    }

    let abduction = abduce(pi_a, &query.evidence)?;
    let world = &pi_a.worlds[abduction.world_index];
    let factual_depth = world.chain.len().saturating_sub(1);
    if factual_depth == 0 {
        return Err(Error::ConfigInvalid("chains need at least one hop".into()));
    }
    let (_, factual_trace) = predict(pi_a, &abduction.u_hat, factual_depth)?;

    let intervened_record = intervene(
        &pi_a.codebook,
        &world.record,
        intervened_role,
        new_value,
    )?;
    let mut pi_b = pi_a.counterfactual(query, &abduction.u_hat, intervened_role, new_value)?;

    // Depth of the counterfactual chain under the intervened mechanisms.
    let mut cf_roles = query.roles.clone();
    cf_roles.insert(abduction.u_hat.clone(), query.background_role.clone());
    let cf_depth = {
        let mut mechanisms: Vec<Mechanism> = query
            .mechanisms
            .iter()
            .filter(|m| cf_roles.get(&m.effect).map(String::as_str) != Some(intervened_role.as_str()))
            .cloned()
            .collect();
        mechanisms.push(Mechanism {
            cause: abduction.u_hat.clone(),
            label: "do".into(),
            effect: new_value.clone(),
        });
        derive_chain(&abduction.u_hat, &mechanisms, &cf_roles)?.len() - 1
    };

    if let Some(spec) = inject {
        if spec.hop >= cf_depth {
            return Err(Error::ConfigInvalid(format!(
                "inject hop {} beyond chain depth {cf_depth}",
                spec.hop
            )));
        }
        // Walk the counterfactual chain to find the hop's key.
        let mut rng = CounterRng::new(query.memory.seed ^ 0x1badb002, 0);
        let mut node = value_id(&abduction.u_hat);
        for _ in 0..spec.hop {
            let (_, trace) = step_once(&pi_b, node)?;
            node = trace;
        }
        let key = hop_key(&pi_b, node)?;
        crate::synth::inject_block_abstention(&mut pi_b.store, &key, 0, &mut rng)?;
    }

    let (y_hat, counterfactual_trace) = predict(&pi_b, &abduction.u_hat, cf_depth)?;
    let ratio = estimate(&factual_trace, &counterfactual_trace)?;

    let depth_warning = (factual_depth != cf_depth).then(|| {
        format!(
            "factual depth {factual_depth} != counterfactual depth {cf_depth}; \
             ratio not depth-normalized"
        )
    });
    let response = CfResponse {
        u_hat: abduction.u_hat.clone(),
        y_hat,
        ratio,
        factual_cr2: factual_trace.cr2,
        counterfactual_cr2: counterfactual_trace.cr2,
        depth_warning,
    };
    Ok(CfRun {
        response,
        abduction,
        intervened_record,
        factual_trace,
        counterfactual_trace,
    })
}

fn step_once(pi: &Scaffold, node: u64) -> Result<(u64, u64)> {
    for &label in &pi.mechanism_labels {
        let key = crate::reasoner::relation_key(node, label, pi.store.config().input_len);
        if let Ok(vote) = pi.store.read(&key) {
            if let Some(ea) = vote.winner {
                return Ok((label, ea.0));
            }
        }
    }
    Err(Error::NotFound)
}

fn hop_key(pi: &Scaffold, node: u64) -> Result<crate::gf2::BitPolynomial> {
    for &label in &pi.mechanism_labels {
        let key = crate::reasoner::relation_key(node, label, pi.store.config().input_len);
        if pi.store.read(&key).is_ok() {
            return Ok(key);
        }
    }
    Err(Error::NotFound)
}
