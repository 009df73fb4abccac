//! Spatial accessibility and equity analysis.
//!
//! The analytics are generic over the floating-point type through
//! [`Scalar`]; the aliases below fix it to `f64` for ordinary use.

// `!(x > 0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accessibility;
pub mod equity;
pub mod error;
pub mod geo;
pub mod linalg;
pub mod outcomes;
pub mod risk;
pub mod scalar;
pub mod spatial;
pub mod special;

pub use accessibility::{
    accessibility_scores, facility_ratio, impedance, AccessParams, AccessibilityField,
    DemandMeasure, DemandZone, Facility, FacilityRatio, Impedance, SkipReason, SkippedFacility,
};
pub use equity::{gini, gini_stratified, welch_t_test, GiniResult, StratifiedGini, StratumGini, TTestResult, TTestStatus};
pub use error::{Error, Result};
pub use geo::{haversine_miles, GeoPoint, Hit, SpatialIndex, EARTH_RADIUS_MILES};
pub use linalg::Matrix;
pub use outcomes::{
    aggregate_years, classify_service_status, mortality_ratios, AggregatedCounty, Aggregation,
    CountyOutcome, Cutoff, MortalityRatios, ServiceLabel, ServiceReport, ServiceStatus,
    ServiceThresholds,
};
pub use risk::{health_risk_index, pca_fit, retained_components, standardize, PcaModel, RiskIndex, Standardized};
pub use scalar::Scalar;
pub use spatial::{
    build_weights, classify_hotspots, getis_ord_gi_star, local_bivariate, BivariateCategory,
    BivariateParams, BivariateResult, HotSpotCategory, HotSpotResult, SpatialWeights, WeightScheme,
};

pub type Point = GeoPoint<f64>;
pub type Zone = DemandZone<f64>;
pub type Hospital = Facility<f64>;
pub type Field = AccessibilityField<f64>;
pub type Params = AccessParams<f64>;
pub type County = CountyOutcome<f64>;
pub type Weights = SpatialWeights<f64>;
pub type Scheme = WeightScheme<f64>;
pub type HotSpots = HotSpotResult<f64>;
pub type Bivariate = BivariateResult<f64>;
pub type Pca = PcaModel<f64>;
pub type Risk = RiskIndex<f64>;
pub type DenseMatrix = Matrix<f64>;
