//! Cross-module workload tests: ingestion statistics against the
//! balls-in-bins oracle, snapshot fidelity under traversal, and
//! full-orbit avalanche distinctness at the larger built-in degrees.

use galmem::gf2::Generator;
use galmem::memory::{BlockMemory, MemoryConfig, RrMode};
use galmem::reasoner::{self, FrontierConfig};
use galmem::snapshot;
use galmem::synth::{self, TreeSpec};
use galmem::Residue;

/// Expected distinct bins and variance after `e` uniform throws into
/// `s` bins (standard occupancy moments).
fn distinct_moments(e: f64, s: f64) -> (f64, f64) {
    let q1 = (1.0 - 1.0 / s).powf(e);
    let q2 = (1.0 - 2.0 / s).powf(e);
    let mean = s * (1.0 - q1);
    let var = s * (s - 1.0) * q2 + s * q1 - s * s * q1 * q1;
    (mean, var)
}

#[test]
fn ingestion_collisions_match_the_birthday_oracle() {
    // ~1e4 edges into 16 blocks of 2^16 slots: per block, collision
    // events are throws minus distinct addresses, so the total follows
    // the occupancy law. Keys are pseudorandom hypervector bindings;
    // blocks consume disjoint segments and are treated as independent.
    let spec = TreeSpec { branching: 10, depth: 4 };
    let edges = synth::generate_tree(&spec);
    assert_eq!(edges.len(), 10 + 100 + 1000 + 10_000);

    let g = Generator::builtin(16).unwrap();
    let config = MemoryConfig::unified(16, g, Residue(0x77), RrMode::DontCare, 1024);
    let mut mem = BlockMemory::new(config).unwrap();
    let report = reasoner::load_edges(&mut mem, &edges).unwrap();

    let e = edges.len() as f64;
    let s = 65536.0;
    let (mean_distinct, var_distinct) = distinct_moments(e, s);
    let expected_per_block = e - mean_distinct;
    let expected_total = 16.0 * expected_per_block;
    let sigma_total = (16.0 * var_distinct).sqrt();
    let total: u64 = report.collisions_per_block.iter().sum();
    assert!(
        (total as f64 - expected_total).abs() <= 3.0 * sigma_total,
        "total collisions {total} vs expected {expected_total:.1} (3 sigma {:.1})",
        3.0 * sigma_total
    );
    // Every block should be in the same band individually.
    for (b, &count) in report.collisions_per_block.iter().enumerate() {
        assert!(
            (count as f64 - expected_per_block).abs() <= 4.0 * var_distinct.sqrt(),
            "block {b}: {count} vs {expected_per_block:.1}"
        );
    }
}

#[test]
fn snapshot_preserves_traversal_results() {
    let spec = TreeSpec { branching: 2, depth: 3 };
    let edges = synth::generate_tree(&spec);
    let g = Generator::builtin(10).unwrap();
    let config = MemoryConfig::unified(10, g, Residue(0x2a), RrMode::DontCare, 160);
    let mut mem = BlockMemory::new(config).unwrap();
    reasoner::load_edges(&mut mem, &edges).unwrap();
    let mut rng = galmem::CounterRng::new(404, 0);
    let key = reasoner::relation_key(1, 1, 160);
    synth::inject_block_abstention(&mut mem, &key, 4, &mut rng).unwrap();

    let image = snapshot::save_bytes(&mem);
    let restored = snapshot::load_bytes(&image).unwrap();
    let fs = FrontierConfig { fs: 8 };
    let before = reasoner::traverse(&mem, 1, &spec.label_set(), 3, fs).unwrap();
    let after = reasoner::traverse(&restored, 1, &spec.label_set(), 3, fs).unwrap();
    assert_eq!(before, after);
    assert!(before.complete[0].cr2 < 1.0 || before.complete.len() == 8);
    // The image is stable across the round trip.
    assert_eq!(snapshot::save_bytes(&restored), image);
}

#[test]
fn avalanche_orbits_are_distinct_at_full_length_for_large_degrees() {
    // Walk x^m, x^(m+1), ..., over the whole multiplicative group and
    // check no state repeats before the period for the big built-ins.
    for m in [4u32, 8, 16, 20, 24] {
        let g = Generator::builtin(m).unwrap();
        let period = (1u64 << m) - 1;
        let mut seen = vec![false; 1 << m];
        let mut state = g.x_to_m();
        for step in 0..period {
            let idx = state.bits() as usize;
            assert!(idx != 0, "m={m}: zero state at step {step}");
            assert!(!seen[idx], "m={m}: repeat at step {step}");
            seen[idx] = true;
            state = g.times_x(state);
        }
        assert_eq!(state, g.x_to_m(), "m={m}: orbit did not close");
    }
}
