//! Deterministic Galois-field hyperdimensional memory.
//!
//! The crate builds up in layers:
//!
//! - [`gf2`]: exact GF(2)[x] / GF(2^m) arithmetic and the LFSR diffusion
//!   map that turns inputs into quasi-orthogonal addresses.
//! - [`qod`]: closed-form and exhaustive verification of the diffusion's
//!   weight statistics, plus the random-sparse-projection baseline.
//! - [`memory`]: the N-block majority-vote store with per-read CR1
//!   confidence and the Rescue / Don't Care collision policies.
//! - [`hdc`]: reversible role-filler binding, majority bundling, and
//!   codebook cleanup.
//! - [`reasoner`]: bounded-frontier multi-hop traversal scored by the
//!   multiplicative path confidence CR2, with decay fitting.
//! - [`counterfactual`]: the dual-scaffold abduction / intervention /
//!   prediction estimator built on the layers above.
//!
//! Everything stochastic draws from the counter-mode generator in
//! [`rng`], so any run is reproducible bit-for-bit from its 64-bit seed.

pub mod counterfactual;
pub mod error;
pub mod gf2;
pub mod hdc;
pub mod memory;
pub mod qod;
pub mod ratio;
pub mod reasoner;
pub mod rng;
pub mod snapshot;
pub mod synth;

pub use error::{Error, Result};
pub use gf2::{diffuse, gf2_mul, is_primitive, kernel_size, reduce};
pub use gf2::{BitPolynomial, Generator, Residue};
pub use memory::{BlockMemory, EntryAddress, MemoryConfig, RrMode, Schedule, VoteResult};
pub use ratio::Ratio;
pub use rng::CounterRng;
