//! Binary hashing of persistence diagrams.
//!
//! Diagrams are normalized into the unit square, binned into reflected 2D
//! histograms and pushed through a learned encoder whose sign bits form an
//! `L`-bit code. Hamming distance between codes then stands in for the
//! Wasserstein distance between diagrams when clustering large collections.
//!
//! The crate also carries everything needed to train and evaluate the
//! hash: exact and entropic transport distances, target similarity
//! matrices, the adversarial training loop, single-linkage clustering and
//! the Fowlkes–Mallows score.

pub mod cluster;
pub mod code;
pub mod diagrams;
pub mod distances;
mod error;
pub mod hashgan;
pub mod par;
pub mod protocol;
pub mod seed;
pub mod similarity;
pub mod vectorize;

pub use code::{BinaryCode, CodeBook};
pub use diagrams::{BoundingBox, DiagramSet, PersistenceDiagram, PersistencePoint};
pub use distances::DistanceMatrix;
pub use error::{Error, Result};
pub use hashgan::{HashConfig, HashModel};
pub use par::Execution;
pub use similarity::{SimilarityMatrix, SimilarityStrategy};
pub use vectorize::{DenseVector, HistogramVector};
