//! Special Q-valued functions: the metric space of signed Q-points, its
//! Euclidean embedding and retractions, grid Dirichlet energies and
//! minimizers, frequency diagnostics, and graph-current computations over
//! flat domains.

pub mod embedret;
pub mod enneper;
pub mod error;
pub mod fields;
pub mod frequency;
pub mod graphs;
pub mod minimize;
pub mod qpoints;
pub mod sampling;
pub mod specpoints;
pub mod suites;

pub use embedret::{Embedding, EmbeddingRegistry, SortedN1, Zeta};
pub use error::{Result, SpecqError};
pub use fields::{GridDomain, GridField, Shape};
pub use qpoints::{metric_g, QPoint};
pub use specpoints::{classify, metric_gs, RegionLabel, SpecPoint, TripleForm};
