//! Spatial association: neighbor weights, Getis-Ord Gi* hot spots and
//! permutation-tested local bivariate correlation.

pub mod bivariate;
pub mod hotspot;
pub mod weights;

pub use bivariate::{local_bivariate, BivariateCategory, BivariateParams, BivariateResult};
pub use hotspot::{classify_hotspots, getis_ord_gi_star, HotSpotCategory, HotSpotResult};
pub use weights::{build_weights, SpatialWeights, WeightScheme};
