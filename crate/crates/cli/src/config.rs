//! Run configuration: defaults, then a JSON file, then `GEOACCESS_SEED`,
//! then command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use geoaccess_core::{AccessParams, BivariateParams, DemandMeasure, Impedance, Scheme};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "GEOACCESS_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpedanceConfig {
    Gaussian,
    Exponential { beta: f64 },
    InversePower { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    Knn { k: usize },
    FixedBand { miles: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub catchment_miles: f64,
    pub impedance: ImpedanceConfig,
    /// `None` means a fixed band equal to the catchment.
    pub weights: Option<WeightsConfig>,
    pub permutations: usize,
    pub seed: u64,
    pub variance_target: f64,
    pub fdr: bool,
    pub min_neighbors: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            catchment_miles: geoaccess_core::accessibility::DEFAULT_CATCHMENT_MILES,
            impedance: ImpedanceConfig::Gaussian,
            weights: None,
            permutations: geoaccess_core::spatial::bivariate::DEFAULT_PERMUTATIONS,
            seed: 42,
            variance_target: geoaccess_core::risk::DEFAULT_VARIANCE_TARGET,
            fdr: false,
            min_neighbors: geoaccess_core::spatial::bivariate::DEFAULT_MIN_NEIGHBORS,
        }
    }
}

/// Optional values from one configuration layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub catchment_miles: Option<f64>,
    pub impedance: Option<ImpedanceConfig>,
    pub weights: Option<WeightsConfig>,
    pub permutations: Option<usize>,
    pub seed: Option<u64>,
    pub variance_target: Option<f64>,
    pub fdr: Option<bool>,
    pub min_neighbors: Option<usize>,
}

impl RunConfig {
    fn apply(&mut self, layer: &ConfigLayer) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = layer.$f { self.$f = v; } )* };
        }
        take!(catchment_miles, impedance, permutations, seed, variance_target, fdr, min_neighbors);
        if layer.weights.is_some() {
            self.weights = layer.weights;
        }
    }

    /// Layers in increasing precedence.
    pub fn resolve(file: Option<&Path>, env_seed: Option<&str>, flags: &ConfigLayer) -> CliResult<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let layer: ConfigLayer = serde_json::from_str(&text)
                .map_err(|e| CliError::input(path, format!("line {}", e.line()), e.to_string()))?;
            cfg.apply(&layer);
        }
        if let Some(s) = env_seed {
            let seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::invalid(format!("{SEED_ENV} must be an unsigned integer, got `{s}`")))?;
            cfg.seed = seed;
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::invalid(format!("{name} must be a positive number, got {v}")))
            }
        };
        positive("catchment_miles", self.catchment_miles)?;
        match self.impedance {
            ImpedanceConfig::Gaussian => {}
            ImpedanceConfig::Exponential { beta } | ImpedanceConfig::InversePower { beta } => positive("impedance beta", beta)?,
        }
        match self.weights {
            Some(WeightsConfig::Knn { k: 0 }) => return Err(CliError::invalid("knn k must be >= 1")),
            Some(WeightsConfig::FixedBand { miles }) => positive("weights band miles", miles)?,
            _ => {}
        }
        if self.permutations < 19 {
            return Err(CliError::invalid(format!("permutations must be >= 19, got {}", self.permutations)));
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(CliError::invalid(format!("variance_target must be in (0, 1], got {}", self.variance_target)));
        }
        if self.min_neighbors < 2 {
            return Err(CliError::invalid(format!("min_neighbors must be >= 2, got {}", self.min_neighbors)));
        }
        Ok(())
    }

    pub fn access_params(&self, demand: DemandMeasure) -> AccessParams<f64> {
        let impedance = match self.impedance {
            ImpedanceConfig::Gaussian => Impedance::Gaussian,
            ImpedanceConfig::Exponential { beta } => Impedance::Exponential { beta },
            ImpedanceConfig::InversePower { beta } => Impedance::InversePower { beta },
        };
        AccessParams {
            catchment_miles: self.catchment_miles,
            impedance,
            demand,
        }
    }

    pub fn weight_scheme(&self) -> Scheme {
        match self.weights {
            Some(WeightsConfig::Knn { k }) => Scheme::Knn { k },
            Some(WeightsConfig::FixedBand { miles }) => Scheme::FixedBand { miles },
            None => Scheme::FixedBand {
                miles: self.catchment_miles,
            },
        }
    }

    pub fn bivariate_params(&self) -> BivariateParams {
        BivariateParams {
            permutations: self.permutations,
            seed: self.seed,
            min_neighbors: self.min_neighbors,
        }
    }
}
