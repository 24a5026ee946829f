//! Network-based multi-omics analysis: tabular ingestion, feature selection,
//! feature-network construction, community detection, GNN node embeddings, and
//! network-integrated phenotype prediction.
//!
//! The crate is organized along the pipeline stages:
//! [`ingest`] -> [`featselect`] -> [`netbuild`] -> [`community`] / [`gnn`] -> [`pipeline`].
//! All randomness is seeded and every operation is deterministic for a fixed seed.

pub mod community;
pub mod error;
pub mod featselect;
pub mod gnn;
pub mod ingest;
pub mod netbuild;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// Stable 64-bit FNV-1a hash, used to derive per-stage and per-tree seeds.
/// Not a general-purpose hasher; it only has to be deterministic across runs.
pub fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        // separator between parts so ("ab","c") != ("a","bc")
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derive a stage-local seed from the global seed and a stage name.
pub fn derive_seed(global_seed: u64, stage: &str) -> u64 {
    fnv1a(&[&global_seed.to_le_bytes(), stage.as_bytes()])
}
