//! Command-line front end.

use std::ffi::OsString;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use geoaccess_core::risk::DEFAULT_PREVALENCE_COLUMNS;
use geoaccess_core::{Cutoff, DemandMeasure};

use crate::commands::{self, AccessJob, PipelineJob, ZoneJob};
use crate::config::{ConfigLayer, ImpedanceConfig, RunConfig, WeightsConfig, SEED_ENV};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VALIDATION};
use crate::synth;

#[derive(Debug, Parser)]
#[command(name = "geoaccess", version, about = "Spatial accessibility and equity analysis")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImpedanceKind {
    Gaussian,
    Exponential,
    InversePower,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightsKind {
    Knn,
    Band,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DemandArg {
    Patients,
    Population,
}

impl From<DemandArg> for DemandMeasure {
    fn from(d: DemandArg) -> Self {
        match d {
            DemandArg::Patients => DemandMeasure::Patients,
            DemandArg::Population => DemandMeasure::Population,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CutoffArg {
    Mean,
    Median,
}

impl From<CutoffArg> for Cutoff {
    fn from(c: CutoffArg) -> Self {
        match c {
            CutoffArg::Mean => Cutoff::Mean,
            CutoffArg::Median => Cutoff::Median,
        }
    }
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Catchment radius d0 in miles.
    #[arg(long, global = true)]
    catchment: Option<f64>,
    /// Distance-decay kernel (default: gaussian).
    #[arg(long, global = true, value_enum)]
    impedance: Option<ImpedanceKind>,
    /// Decay parameter for the exponential and inverse-power kernels.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Spatial weights: knn, or a fixed band (default: band = catchment).
    #[arg(long, global = true, value_enum)]
    weights: Option<WeightsKind>,
    /// Neighbors per zone for knn weights (default: 8).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Band radius in miles for band weights.
    #[arg(long, global = true)]
    band_miles: Option<f64>,
    /// Permutations for bivariate pseudo p-values (default: 199).
    #[arg(long, global = true)]
    permutations: Option<usize>,
    /// Seed for permutations and the synthetic region (default: 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cumulative explained variance the risk index must reach (default: 0.75).
    #[arg(long, global = true)]
    variance_target: Option<f64>,
    /// Require Benjamini-Hochberg rejection for hot-spot categories.
    #[arg(long, global = true)]
    fdr: bool,
    /// Smallest neighborhood, self included, for a defined local r (default: 8).
    #[arg(long, global = true)]
    min_neighbors: Option<usize>,
}

#[derive(Debug, Args)]
struct GeoArgs {
    /// GeoJSON FeatureCollection joined on the `zone_id` property.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    geojson_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ZoneInputs {
    #[arg(long)]
    zones: PathBuf,
    /// Extra zone_id-keyed CSVs to take columns from (searched before the zones file).
    #[arg(long = "values")]
    values: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    geo: GeoArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// KD2SFCA accessibility per zone.
    Access {
        #[arg(long)]
        zones: PathBuf,
        #[arg(long)]
        facilities: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-facility supply-to-demand ratios.
        #[arg(long)]
        facility_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "patients")]
        demand: DemandArg,
        #[command(flatten)]
        geo: GeoArgs,
    },
    /// Gini index overall and by urban/rural stratum.
    Gini {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "accessibility")]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch t-test of urban against rural values.
    Ttest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "accessibility")]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Getis-Ord Gi* hot and cold spots.
    Hotspot {
        #[command(flatten)]
        inputs: ZoneInputs,
        #[arg(long, default_value = "accessibility")]
        column: String,
    },
    /// Local bivariate association of two zone variables.
    Bivariate {
        #[command(flatten)]
        inputs: ZoneInputs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// PCA composite health-risk index.
    RiskIndex {
        #[command(flatten)]
        inputs: ZoneInputs,
        /// Comma-separated prevalence columns.
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
        #[arg(long)]
        pca_out: Option<PathBuf>,
    },
    /// County mortality ratios and service-status labels.
    Mortality {
        #[arg(long)]
        counties: PathBuf,
        #[arg(long, default_value = "2018-2022", value_parser = parse_years)]
        years: RangeInclusive<i32>,
        #[arg(long, value_enum, default_value = "mean")]
        cutoff: CutoffArg,
        #[arg(long, default_value_t = 1.0)]
        elevated_sd: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// ADRD cohort summary from patient records.
    Cohort {
        #[arg(long)]
        patients: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        zone_counts_out: Option<PathBuf>,
    },
    /// Every analysis in sequence, outputs into one directory.
    Pipeline {
        #[arg(long)]
        zones: PathBuf,
        #[arg(long)]
        facilities: PathBuf,
        #[arg(long)]
        counties: PathBuf,
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "2018-2022", value_parser = parse_years)]
        years: RangeInclusive<i32>,
        #[arg(long, value_enum, default_value = "patients")]
        demand: DemandArg,
        #[arg(long, default_value = "poverty_rate")]
        poverty_column: String,
        #[arg(long, value_delimiter = ',')]
        risk_columns: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "mean")]
        cutoff: CutoffArg,
        #[arg(long, default_value_t = 1.0)]
        elevated_sd: f64,
    },
    /// Write a seeded synthetic region (seed from --seed / config).
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = synth::DEFAULT_URBAN_ZONES)]
        urban: usize,
        #[arg(long, default_value_t = synth::DEFAULT_RURAL_ZONES)]
        rural: usize,
        #[arg(long, default_value_t = synth::DEFAULT_FACILITIES)]
        facilities: usize,
    },
}

fn parse_years(s: &str) -> Result<RangeInclusive<i32>, String> {
    let bad = || format!("expected YEAR or FIRST-LAST, got `{s}`");
    let (a, b) = match s.split_once('-') {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(format!("empty year range `{s}`"));
    }
    Ok(a..=b)
}

impl GlobalArgs {
    fn layer(&self) -> CliResult<ConfigLayer> {
        let impedance = match (self.impedance, self.beta) {
            (None, None) => None,
            (None, Some(_)) => return Err(CliError::invalid("--beta needs --impedance exponential|inverse-power")),
            (Some(ImpedanceKind::Gaussian), None) => Some(ImpedanceConfig::Gaussian),
            (Some(ImpedanceKind::Gaussian), Some(_)) => return Err(CliError::invalid("the gaussian kernel takes no --beta")),
            (Some(ImpedanceKind::Exponential), b) => Some(ImpedanceConfig::Exponential { beta: b.unwrap_or(1.0) }),
            (Some(ImpedanceKind::InversePower), b) => Some(ImpedanceConfig::InversePower { beta: b.unwrap_or(1.0) }),
        };
        let weights = match (self.weights, self.k, self.band_miles) {
            (Some(WeightsKind::Knn), _, Some(_)) | (Some(WeightsKind::Band), Some(_), _) | (None, Some(_), Some(_)) => {
                return Err(CliError::invalid("--k applies to knn weights and --band-miles to band weights"))
            }
            (Some(WeightsKind::Knn), k, None) | (None, k @ Some(_), None) => Some(WeightsConfig::Knn { k: k.unwrap_or(8) }),
            (Some(WeightsKind::Band), None, m) | (None, None, m @ Some(_)) => m.map(|miles| WeightsConfig::FixedBand { miles }),
            (None, None, None) => None,
        };
        Ok(ConfigLayer {
            catchment_miles: self.catchment,
            impedance,
            weights,
            permutations: self.permutations,
            seed: self.seed,
            variance_target: self.variance_target,
            fdr: self.fdr.then_some(true),
            min_neighbors: self.min_neighbors,
        })
    }

    fn resolve(&self) -> CliResult<RunConfig> {
        let env_seed = std::env::var(SEED_ENV).ok();
        let mut cfg = RunConfig::resolve(self.config.as_deref(), env_seed.as_deref(), &self.layer()?)?;
        // `--weights band` without a width means the catchment band, even
        // when the config file chose something else.
        if matches!(self.weights, Some(WeightsKind::Band)) && self.band_miles.is_none() {
            cfg.weights = None;
        }
        Ok(cfg)
    }
}

fn prevalence_columns(given: Option<Vec<String>>) -> Vec<String> {
    given.unwrap_or_else(|| DEFAULT_PREVALENCE_COLUMNS.iter().map(|s| s.to_string()).collect())
}

fn zone_job(i: &ZoneInputs) -> ZoneJob<'_> {
    ZoneJob {
        zones: &i.zones,
        geometry: i.geo.geometry.as_deref(),
        values: &i.values,
        out: &i.out,
        geojson_out: i.geo.geojson_out.as_deref(),
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<()> {
    match command {
        Command::Access {
            zones,
            facilities,
            out,
            facility_out,
            demand,
            geo,
        } => {
            let job = AccessJob {
                zones: &zones,
                geometry: geo.geometry.as_deref(),
                facilities: &facilities,
                demand: demand.into(),
                out: &out,
                facility_out: facility_out.as_deref(),
                geojson_out: geo.geojson_out.as_deref(),
            };
            commands::access(&job, cfg)?;
        }
        Command::Gini { input, column, out } => {
            commands::gini_report(&input, &column, &out)?;
        }
        Command::Ttest { input, column, out } => {
            commands::ttest_report(&input, &column, &out)?;
        }
        Command::Hotspot { inputs, column } => {
            commands::hotspot(&zone_job(&inputs), &column, cfg)?;
        }
        Command::Bivariate { inputs, x, y } => {
            commands::bivariate(&zone_job(&inputs), &x, &y, cfg)?;
        }
        Command::RiskIndex { inputs, columns, pca_out } => {
            commands::risk_index(&zone_job(&inputs), &prevalence_columns(columns), pca_out.as_deref(), cfg)?;
        }
        Command::Mortality {
            counties,
            years,
            cutoff,
            elevated_sd,
            out,
        } => {
            commands::mortality(&counties, years, &commands::thresholds(cutoff.into(), elevated_sd)?, &out)?;
        }
        Command::Cohort {
            patients,
            out,
            zone_counts_out,
        } => {
            commands::cohort(&patients, &out, zone_counts_out.as_deref())?;
        }
        Command::Pipeline {
            zones,
            facilities,
            counties,
            geometry,
            out_dir,
            years,
            demand,
            poverty_column,
            risk_columns,
            cutoff,
            elevated_sd,
        } => {
            let risk_columns = prevalence_columns(risk_columns);
            let job = PipelineJob {
                zones: &zones,
                facilities: &facilities,
                counties: &counties,
                geometry: geometry.as_deref(),
                out_dir: &out_dir,
                years,
                demand: demand.into(),
                poverty_column: &poverty_column,
                risk_columns: &risk_columns,
                thresholds: commands::thresholds(cutoff.into(), elevated_sd)?,
            };
            commands::pipeline(&job, cfg)?;
        }
        Command::Synth {
            out_dir,
            urban,
            rural,
            facilities,
        } => {
            let region = synth::generate_synthetic_region(cfg.seed, urban, rural, facilities)?;
            synth::write_region(&region, &out_dir)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = cli.global.resolve()?;
    log::debug!("run config: {cfg:?}");
    match cli.global.threads {
        Some(0) => Err(CliError::invalid("--threads must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::invalid(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(cli.command, &cfg))
        }
        None => dispatch(cli.command, &cfg),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage or validation error, 2 I/O error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
