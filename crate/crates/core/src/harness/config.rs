//! Declarative experiment configuration (JSON, unknown keys rejected).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{PathLoss, PlacementDistribution, QuadratureSpec, ScenarioParams, UeSector, UlaGeometry};
use crate::covariance::CovarianceMethod;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Bench,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Fig1,
        ExperimentKind::Fig2,
        ExperimentKind::Fig3,
        ExperimentKind::Fig4,
        ExperimentKind::Bench,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1 => "fig1",
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Bench => "bench",
        }
    }

    /// Tag mixed into the seed tree.
    pub fn tag(&self) -> u64 {
        match self {
            ExperimentKind::Fig1 => 1,
            ExperimentKind::Fig2 => 2,
            ExperimentKind::Fig3 => 3,
            ExperimentKind::Fig4 => 4,
            ExperimentKind::Bench => 5,
        }
    }

    pub fn allowed_schemes(&self) -> &'static [EstimatorKind] {
        use EstimatorKind::*;
        match self {
            ExperimentKind::Fig1 => &[Mmse, Ls, Dft],
            ExperimentKind::Fig2 | ExperimentKind::Bench => &EstimatorKind::ALL,
            ExperimentKind::Fig3 => &[Mmse, Dft],
            ExperimentKind::Fig4 => &[Dft],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Physical scenario. Angles in degrees, powers in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConfig {
    pub wavelength_m: f64,
    pub spacing_wavelengths: f64,
    /// Height `b` of the array above the user plane.
    pub array_height_m: f64,
    pub pilot_length: usize,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub angular_spread_deg: f64,
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    pub azimuth_min_deg: f64,
    pub azimuth_max_deg: f64,
    pub placement: PlacementDistribution,
    pub pathloss: PathLoss,
    pub quadrature_nodes: usize,
    pub truncation_sigmas: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        PhysicalConfig {
            wavelength_m: 0.1,
            spacing_wavelengths: 0.25,
            array_height_m: 10.0,
            pilot_length: 10,
            tx_power_dbm: 20.0,
            noise_power_dbm: -87.0,
            bandwidth_hz: 100e6,
            angular_spread_deg: 10.0,
            min_distance_m: 5.0,
            max_distance_m: 100.0,
            azimuth_min_deg: -60.0,
            azimuth_max_deg: 60.0,
            placement: PlacementDistribution::UniformDistance,
            pathloss: PathLoss::default(),
            quadrature_nodes: 2048,
            truncation_sigmas: 10.0,
        }
    }
}

impl PhysicalConfig {
    pub fn scenario(&self) -> Result<ScenarioParams> {
        ScenarioParams::from_dbm(self.pilot_length, self.tx_power_dbm, self.noise_power_dbm, self.bandwidth_hz)
    }

    pub fn sector(&self) -> UeSector {
        UeSector {
            min_distance: self.min_distance_m,
            max_distance: self.max_distance_m,
            azimuth_min: self.azimuth_min_deg.to_radians(),
            azimuth_max: self.azimuth_max_deg.to_radians(),
            distribution: self.placement,
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.quadrature_nodes, self.truncation_sigmas)
    }

    pub fn geometry_for_aperture(&self, l_over_lambda: f64) -> Result<UlaGeometry> {
        UlaGeometry::from_aperture(l_over_lambda, self.spacing_wavelengths, self.wavelength_m, self.array_height_m)
    }

    pub fn geometry_for_antennas(&self, n: usize) -> Result<UlaGeometry> {
        UlaGeometry::new(n, self.spacing_wavelengths * self.wavelength_m, self.wavelength_m, self.array_height_m)
    }

    /// Elevation range `[θ_near, θ_far]` in degrees spanned by the distance bounds.
    pub fn elevation_range_deg(&self) -> (f64, f64) {
        let b = self.array_height_m;
        (
            -(b / self.min_distance_m).atan().to_degrees(),
            -(b / self.max_distance_m).atan().to_degrees(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Aperture sweep for fig1/fig4; `N = L/λ / spacing`.
    pub l_over_lambda: Vec<f64>,
    pub sigma_theta_deg: Vec<f64>,
    /// Array size used where the aperture is not swept (fig2, fig3).
    pub n_antennas: usize,
    pub snapshots: Vec<usize>,
    /// Equal-width elevation bins over the range implied by the distance bounds.
    pub elevation_bins: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            l_over_lambda: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            sigma_theta_deg: vec![1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0],
            n_antennas: 64,
            snapshots: vec![20, 50, 100],
            elevation_bins: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub iso_rank_tol: f64,
    /// Scale the ISO spectrum by the user's β.
    pub iso_beta_scale: bool,
    pub clamp_tol: f64,
    pub covariance_method: CovarianceMethod,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            iso_rank_tol: 1e-6,
            iso_beta_scale: false,
            clamp_tol: crate::linalg::DEFAULT_CLAMP_TOL,
            covariance_method: CovarianceMethod::Toeplitz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    /// Cubic precomputes (MMSE, ISO) are timed only up to this size.
    pub max_cubic_precompute_n: usize,
    /// Dense applies (MMSE, ISO) are timed only up to this size; an N×N complex
    /// matrix needs 16·N² bytes.
    pub max_dense_apply_n: usize,
    /// Inner loops repeat until one sample takes at least this long.
    pub min_sample_seconds: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![256, 512, 1024, 2048, 4096, 8192, 16384],
            repetitions: 5,
            max_cubic_precompute_n: 2048,
            max_dense_apply_n: 4096,
            min_sample_seconds: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Optional here; the command line may supply or override it.
    pub experiment: Option<ExperimentKind>,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub physical: PhysicalConfig,
    pub sweeps: SweepConfig,
    /// Defaults to every scheme the experiment supports.
    pub schemes: Option<Vec<EstimatorKind>>,
    pub n_drops: usize,
    pub n_stat_batches: usize,
    pub whisker_k: f64,
    pub estimation: EstimationConfig,
    pub bench: BenchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            master_seed: 1,
            output: None,
            physical: PhysicalConfig::default(),
            sweeps: SweepConfig::default(),
            schemes: None,
            n_drops: 200,
            n_stat_batches: 2000,
            whisker_k: crate::metrics::DEFAULT_WHISKER_K,
            estimation: EstimationConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite (got {x})")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn experiment(&self) -> Result<ExperimentKind> {
        self.experiment.ok_or_else(|| config_err("no experiment selected"))
    }

    pub fn schemes_for(&self, kind: ExperimentKind) -> Vec<EstimatorKind> {
        match &self.schemes {
            Some(s) => s.clone(),
            None => kind.allowed_schemes().to_vec(),
        }
    }

    /// Checks every field. Scheme lists are checked against the selected
    /// experiment when there is one.
    pub fn validate(&self) -> Result<()> {
        let p = &self.physical;
        positive("wavelength_m", p.wavelength_m)?;
        positive("spacing_wavelengths", p.spacing_wavelengths)?;
        positive("array_height_m", p.array_height_m)?;
        positive("bandwidth_hz", p.bandwidth_hz)?;
        positive("angular_spread_deg", p.angular_spread_deg)?;
        positive("truncation_sigmas", p.truncation_sigmas)?;
        if p.pilot_length == 0 {
            return Err(config_err("pilot_length must be at least 1"));
        }
        if !(p.tx_power_dbm.is_finite() && p.noise_power_dbm.is_finite()) {
            return Err(config_err("powers must be finite"));
        }
        if !(p.min_distance_m >= 5.0 && p.min_distance_m < p.max_distance_m && p.max_distance_m.is_finite()) {
            return Err(config_err(format!(
                "need 5 <= min_distance_m < max_distance_m (got {} and {})",
                p.min_distance_m, p.max_distance_m
            )));
        }
        self.physical.sector().validate().map_err(|e| config_err(e.to_string()))?;
        self.physical.quadrature().map_err(|e| config_err(e.to_string()))?;
        self.physical.scenario().map_err(|e| config_err(e.to_string()))?;
        positive("pathloss.reference_distance_m", p.pathloss.reference_distance_m)?;
        if !(p.pathloss.gain_at_reference_db.is_finite() && p.pathloss.exponent.is_finite()) {
            return Err(config_err("path-loss parameters must be finite"));
        }

        let s = &self.sweeps;
        if s.l_over_lambda.is_empty() || s.sigma_theta_deg.is_empty() || s.snapshots.is_empty() {
            return Err(config_err("sweep lists must be non-empty"));
        }
        for &l in &s.l_over_lambda {
            positive("l_over_lambda", l)?;
            let n = (l / p.spacing_wavelengths).round();
            if n < 1.0 {
                return Err(config_err(format!("L/lambda = {l} gives fewer than one antenna")));
            }
        }
        for &sig in &s.sigma_theta_deg {
            positive("sigma_theta_deg", sig)?;
        }
        if s.snapshots.contains(&0) {
            return Err(config_err("snapshot counts must be at least 1"));
        }
        if s.n_antennas == 0 || s.elevation_bins == 0 {
            return Err(config_err("n_antennas and elevation_bins must be at least 1"));
        }

        if self.n_drops == 0 || self.n_stat_batches == 0 {
            return Err(config_err("n_drops and n_stat_batches must be at least 1"));
        }
        if !(self.whisker_k.is_finite() && self.whisker_k >= 0.0) {
            return Err(config_err("whisker_k must be non-negative"));
        }
        let e = &self.estimation;
        if !(e.iso_rank_tol.is_finite() && e.iso_rank_tol >= 0.0 && e.clamp_tol.is_finite() && e.clamp_tol >= 0.0) {
            return Err(config_err("tolerances must be non-negative"));
        }
        if let CovarianceMethod::Shrinkage { eta } = e.covariance_method {
            if !(0.0..=1.0).contains(&eta) {
                return Err(config_err(format!("shrinkage eta must lie in [0, 1] (got {eta})")));
            }
        }

        let b = &self.bench;
        if b.sizes.is_empty() || b.sizes.contains(&0) || b.repetitions == 0 {
            return Err(config_err("bench sizes and repetitions must be non-empty and positive"));
        }
        if !(b.min_sample_seconds >= 0.0 && b.min_sample_seconds.is_finite()) {
            return Err(config_err("bench min_sample_seconds must be non-negative"));
        }

        if let Some(schemes) = &self.schemes {
            if schemes.is_empty() {
                return Err(config_err("schemes must be non-empty"));
            }
            if let Some(kind) = self.experiment {
                for s in schemes {
                    if !kind.allowed_schemes().contains(s) {
                        return Err(config_err(format!("scheme {s} is not supported by {kind}")));
                    }
                }
            }
        }
        Ok(())
    }
}
