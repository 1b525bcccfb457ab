//! Numerical companion for multi-particle Anderson localization on lattices
//! and continuum grids: model assembly, per-realization spectral quantities,
//! ensemble estimators, hypothesis checks and independent oracles.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod sparse;
pub mod spectral;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{
    cross_separation, diameter, find_cluster_partition, hausdorff_dist, partition_dist, CellIndex, Configuration,
    BoxRegion, ParticleGrid, Partition, ProductGrid, Region,
};
pub use model::{assemble_hamiltonian, assemble_partial, sample_disorder, ModelConfig, ProductDomain};
pub use sparse::SparseOperator;
