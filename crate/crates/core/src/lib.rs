//! Algebraic subspace clustering by descending filtrations.
//!
//! Points sampled from a union of linear subspaces are embedded by the
//! Veronese map; polynomials vanishing on the sample give hyperplanes through
//! each subspace, and intersecting those hyperplanes one at a time walks down
//! from the ambient space to the subspace through a chosen reference point.
//!
//! * [`fasc`] recovers every subspace exactly from clean data.
//! * [`filtration::fsasc`] turns one filtration per point into an affinity for
//!   spectral clustering, which tolerates noise.
//! * [`sasc`] holds the single-polynomial affinities used as baselines.

pub mod datagen;
pub mod error;
pub mod fasc;
pub mod filtration;
pub mod io;
pub mod linalg;
pub mod points;
pub mod polyring;
pub mod sasc;
pub mod spectral;
pub mod vanishing;

pub use datagen::{Arrangement, SampleSpec, Subspace};
pub use error::{Error, Result};
pub use fasc::FascOutput;
pub use filtration::{FiltrationParams, FiltrationRow, FsascConfig, FsascOutput};
pub use points::PointCloud;
pub use polyring::{HomogeneousPolynomial, MonomialBasis};
pub use sasc::{AffinityMatrix, SascVariant};
pub use spectral::ClusteringResult;
pub use vanishing::{RankMode, RankPolicy};
