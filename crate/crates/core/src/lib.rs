//! Unsupervised traffic classification with human-readable rules.
//!
//! Training runs `ingest -> features -> embedding -> clustering -> rules`:
//! raw records are binned and binarized, the binary matrix is embedded with a
//! diffusion map, the embedding is clustered with k-means, clusters are mapped
//! to classes, and an ordered set of conjunctive rules is extracted that
//! reproduces those classes on the binary features. Testing only needs the
//! fitted feature schema and the ruleset; points that match no rule are
//! reported as unknown anomalies.
//!
//! The numerical stages are generic over the scalar type (`f32` or `f64`);
//! the `*64` / `*32` aliases below name the common instantiations.

pub mod clustering;
pub mod embedding;
pub mod error;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rules;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Embedding64 = embedding::Embedding<f64>;
pub type Embedding32 = embedding::Embedding<f32>;
pub type SpectralDecomposition64 = embedding::SpectralDecomposition<f64>;
pub type SpectralDecomposition32 = embedding::SpectralDecomposition<f32>;
pub type EpsilonScan64 = embedding::EpsilonScan<f64>;
pub type EpsilonScan32 = embedding::EpsilonScan<f32>;
pub type DiffusionConfig64 = embedding::DiffusionConfig<f64>;
pub type DiffusionConfig32 = embedding::DiffusionConfig<f32>;
pub type ClusterModel64 = clustering::ClusterModel<f64>;
pub type ClusterModel32 = clustering::ClusterModel<f32>;
pub type SilhouetteReport64 = clustering::SilhouetteReport<f64>;
pub type SilhouetteReport32 = clustering::SilhouetteReport<f32>;
