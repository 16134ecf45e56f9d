//! Physical scenario: array geometry, user placement, local scattering,
//! spatial covariance, path loss and random channel/pilot sampling.

mod quadrature;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use quadrature::GaussLegendre;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, ComplexMatrix};
use crate::rng::complex_gaussian_vector;

/// Vertical uniform linear array; antenna `n` sits at height `n·d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    n_antennas: usize,
    spacing: f64,
    wavelength: f64,
    elevation: f64,
}

impl UlaGeometry {
    pub fn new(n_antennas: usize, spacing: f64, wavelength: f64, elevation: f64) -> Result<Self> {
        if n_antennas < 1 {
            return Err(Error::invalid("array needs at least one antenna"));
        }
        if !(spacing > 0.0 && wavelength > 0.0 && elevation >= 0.0) {
            return Err(Error::invalid(format!(
                "need d > 0, lambda > 0, b >= 0 (got d={spacing}, lambda={wavelength}, b={elevation})"
            )));
        }
        Ok(UlaGeometry {
            n_antennas,
            spacing,
            wavelength,
            elevation,
        })
    }

    /// Array sized so that `N·d ≈ aperture_wavelengths·λ`.
    pub fn from_aperture(
        aperture_wavelengths: f64,
        spacing_wavelengths: f64,
        wavelength: f64,
        elevation: f64,
    ) -> Result<Self> {
        if !(aperture_wavelengths > 0.0 && spacing_wavelengths > 0.0) {
            return Err(Error::invalid("aperture and spacing must be positive"));
        }
        let n = (aperture_wavelengths / spacing_wavelengths).round().max(1.0) as usize;
        Self::new(n, spacing_wavelengths * wavelength, wavelength, elevation)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn aperture(&self) -> f64 {
        self.n_antennas as f64 * self.spacing
    }

    pub fn aperture_wavelengths(&self) -> f64 {
        self.aperture() / self.wavelength
    }

    /// Phase advance between neighbouring antennas per unit `sin θ`.
    fn phase_per_element(&self) -> f64 {
        2.0 * PI * self.spacing / self.wavelength
    }
}

/// Plane-wave response of the vertical ULA. The azimuth drops out because
/// the antennas only differ along z.
pub fn array_response(geom: &UlaGeometry, _azimuth: f64, elevation: f64) -> CVector {
    let step = geom.phase_per_element() * elevation.sin();
    CVector::from_fn(geom.n_antennas, |n, _| Complex64::from_polar(1.0, step * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePlacement {
    pub horizontal_distance: f64,
    pub azimuth: f64,
    /// Negative: users sit below the array.
    pub elevation: f64,
    pub distance_3d: f64,
}

impl UePlacement {
    pub fn from_horizontal(array_elevation: f64, horizontal_distance: f64, azimuth: f64) -> Self {
        UePlacement {
            horizontal_distance,
            azimuth,
            elevation: -(array_elevation / horizontal_distance).atan(),
            distance_3d: array_elevation.hypot(horizontal_distance),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlacementDistribution {
    /// Horizontal distance uniform on `[min, max]`.
    #[default]
    UniformDistance,
    /// Uniform density over the annular sector.
    UniformArea,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeSector {
    pub min_distance: f64,
    pub max_distance: f64,
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub distribution: PlacementDistribution,
}

impl Default for UeSector {
    fn default() -> Self {
        UeSector {
            min_distance: 5.0,
            max_distance: 100.0,
            azimuth_min: -FRAC_PI_3,
            azimuth_max: FRAC_PI_3,
            distribution: PlacementDistribution::UniformDistance,
        }
    }
}

impl UeSector {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_distance > 0.0 && self.min_distance <= self.max_distance) {
            return Err(Error::invalid(format!(
                "need 0 < min_distance <= max_distance (got {} and {})",
                self.min_distance, self.max_distance
            )));
        }
        if !(self.azimuth_min <= self.azimuth_max && self.azimuth_min.abs() <= PI && self.azimuth_max.abs() <= PI) {
            return Err(Error::invalid("azimuth sector must lie in [-pi, pi]"));
        }
        Ok(())
    }

    /// Sub-sector whose elevations fall in `[elev_lo, elev_hi]` (both ≤ 0).
    pub fn elevation_slice(&self, array_elevation: f64, elev_lo: f64, elev_hi: f64) -> Result<UeSector> {
        if !(elev_lo <= elev_hi && elev_hi < 0.0) || array_elevation <= 0.0 {
            return Err(Error::invalid("elevation slice needs elev_lo <= elev_hi < 0 and b > 0"));
        }
        let near = array_elevation / elev_lo.abs().tan();
        let far = array_elevation / elev_hi.abs().tan();
        Ok(UeSector {
            min_distance: near.max(self.min_distance),
            max_distance: far.min(self.max_distance),
            ..*self
        })
    }
}

pub fn draw_ue<R: Rng + ?Sized>(sector: &UeSector, array_elevation: f64, rng: &mut R) -> UePlacement {
    let u: f64 = rng.random();
    let (lo, hi) = (sector.min_distance, sector.max_distance);
    let dist = match sector.distribution {
        PlacementDistribution::UniformDistance => lo + (hi - lo) * u,
        PlacementDistribution::UniformArea => (lo * lo + (hi * hi - lo * lo) * u).sqrt(),
    };
    let v: f64 = rng.random();
    let azimuth = sector.azimuth_min + (sector.azimuth_max - sector.azimuth_min) * v;
    UePlacement::from_horizontal(array_elevation, dist, azimuth)
}

/// Laplacian local scattering around a nominal elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringProfile {
    nominal_elevation: f64,
    angular_spread: f64,
    beta: f64,
}

impl ScatteringProfile {
    pub fn new(nominal_elevation: f64, angular_spread: f64, beta: f64) -> Result<Self> {
        if !(angular_spread > 0.0 && beta > 0.0) {
            return Err(Error::invalid(format!(
                "need angular spread > 0 and beta > 0 (got {angular_spread}, {beta})"
            )));
        }
        Ok(ScatteringProfile {
            nominal_elevation,
            angular_spread,
            beta,
        })
    }

    pub fn nominal_elevation(&self) -> f64 {
        self.nominal_elevation
    }

    pub fn angular_spread(&self) -> f64 {
        self.angular_spread
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Unnormalized Laplacian density `exp(−√2 |θ − θ_k| / σ_θ)`.
pub fn laplacian_density(profile: &ScatteringProfile, elevation: f64) -> f64 {
    (-SQRT_2 * (elevation - profile.nominal_elevation).abs() / profile.angular_spread).exp()
}

/// Integration rule for the covariance integral.
///
/// The support is `[θ_k − kσ, θ_k + kσ] ∩ [−π/2, π/2]`, split at the density
/// peak so each panel integrates a smooth function; each panel uses half the
/// nodes.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    rule: Arc<GaussLegendre>,
    nodes: usize,
    truncation_sigmas: f64,
}

impl QuadratureSpec {
    pub const DEFAULT_NODES: usize = 2048;
    pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 10.0;

    pub fn new(nodes: usize, truncation_sigmas: f64) -> Result<Self> {
        if nodes < 2 || nodes % 2 != 0 {
            return Err(Error::invalid("quadrature node count must be even and >= 2"));
        }
        if !(truncation_sigmas > 0.0) {
            return Err(Error::invalid("truncation must be positive"));
        }
        Ok(QuadratureSpec {
            rule: Arc::new(GaussLegendre::new(nodes / 2)),
            nodes,
            truncation_sigmas,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn truncation_sigmas(&self) -> f64 {
        self.truncation_sigmas
    }

    pub fn support(&self, profile: &ScatteringProfile) -> (f64, f64) {
        let half = self.truncation_sigmas * profile.angular_spread;
        (
            (profile.nominal_elevation - half).max(-FRAC_PI_2),
            (profile.nominal_elevation + half).min(FRAC_PI_2),
        )
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_NODES, Self::DEFAULT_TRUNCATION_SIGMAS).expect("valid defaults")
    }
}

/// Hermitian Toeplitz spatial covariance described by its lags
/// `r(n) = E[h_{m+n} h_m^*] = [R]_{n,0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCovariance {
    lags: Vec<Complex64>,
}

impl SpatialCovariance {
    pub fn from_lags(lags: Vec<Complex64>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::invalid("covariance needs at least one lag"));
        }
        if lags.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        Ok(SpatialCovariance { lags })
    }

    pub fn lags(&self) -> &[Complex64] {
        &self.lags
    }

    pub fn n_antennas(&self) -> usize {
        self.lags.len()
    }

    /// `tr(R) = N·r(0)`.
    pub fn trace(&self) -> f64 {
        self.lags.len() as f64 * self.lags[0].re
    }

    /// Dense `N×N` matrix; O(N²) memory.
    pub fn matrix(&self) -> ComplexMatrix {
        linalg::toeplitz_hermitian(&self.lags)
    }
}

/// Evaluates `r(n) = β ∫ exp(j(2π/λ) d n sinθ) f(θ) dθ` with `f` normalized on
/// the quadrature support.
pub fn build_covariance(
    geom: &UlaGeometry,
    profile: &ScatteringProfile,
    quad: &QuadratureSpec,
) -> Result<SpatialCovariance> {
    let (lower, upper) = quad.support(profile);
    if !(upper > lower) {
        return Err(Error::EmptySupport { lower, upper });
    }
    let peak = profile.nominal_elevation.clamp(lower, upper);
    let mut panels = Vec::with_capacity(2);
    if peak > lower {
        panels.push((lower, peak));
    }
    if upper > peak {
        panels.push((peak, upper));
    }

    let kappa = geom.phase_per_element();
    let mut weights = Vec::with_capacity(quad.nodes);
    let mut steps = Vec::with_capacity(quad.nodes);
    for &(a, b) in &panels {
        for (theta, w) in quad.rule.mapped(a, b) {
            weights.push(w * laplacian_density(profile, theta));
            steps.push(Complex64::from_polar(1.0, kappa * theta.sin()));
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySupport { lower, upper });
    }
    let scale = profile.beta / total;

    let n = geom.n_antennas;
    let mut lags = vec![Complex64::new(0.0, 0.0); n];
    let mut phasors: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w * scale, 0.0)).collect();
    lags[0] = Complex64::new(profile.beta, 0.0);
    for lag in lags.iter_mut().skip(1) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, s) in phasors.iter_mut().zip(&steps) {
            *p *= s;
            acc += *p;
        }
        *lag = acc;
    }
    SpatialCovariance::from_lags(lags)
}

/// Distance-based large-scale fading in dB: `g_ref − 10 α log10(d / d_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLoss {
    pub gain_at_reference_db: f64,
    pub reference_distance_m: f64,
    pub exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            gain_at_reference_db: -148.1,
            reference_distance_m: 1000.0,
            exponent: 3.76,
        }
    }
}

impl PathLoss {
    pub fn beta_db(&self, distance_3d: f64) -> f64 {
        self.gain_at_reference_db - 10.0 * self.exponent * (distance_3d / self.reference_distance_m).log10()
    }

    pub fn beta(&self, distance_3d: f64) -> f64 {
        db_to_linear(self.beta_db(distance_3d))
    }
}

pub fn pathloss_beta(distance_3d: f64) -> f64 {
    PathLoss::default().beta(distance_3d)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Pilot-phase link budget. Powers are linear (watts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pilot_length: usize,
    tx_power: f64,
    noise_power: f64,
    bandwidth_hz: f64,
}

impl ScenarioParams {
    pub fn new(pilot_length: usize, tx_power: f64, noise_power: f64, bandwidth_hz: f64) -> Result<Self> {
        if pilot_length < 1 || !(tx_power > 0.0 && noise_power > 0.0) {
            return Err(Error::invalid("pilot length and powers must be positive"));
        }
        Ok(ScenarioParams {
            pilot_length,
            tx_power,
            noise_power,
            bandwidth_hz,
        })
    }

    pub fn from_dbm(pilot_length: usize, tx_power_dbm: f64, noise_power_dbm: f64, bandwidth_hz: f64) -> Result<Self> {
        Self::new(
            pilot_length,
            db_to_linear(tx_power_dbm - 30.0),
            db_to_linear(noise_power_dbm - 30.0),
            bandwidth_hz,
        )
    }

    /// Noise-free variant used for perfect-SNR limits.
    pub fn with_noise_power(self, noise_power: f64) -> Result<Self> {
        Self::new(self.pilot_length, self.tx_power, noise_power, self.bandwidth_hz)
    }

    pub fn pilot_length(&self) -> usize {
        self.pilot_length
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// `γ = τ_p ρ / σ²`.
    pub fn snr(&self) -> f64 {
        self.pilot_length as f64 * self.tx_power / self.noise_power
    }

    /// `τ_p √ρ`, the deterministic gain in front of `h` in the observation.
    pub fn pilot_gain(&self) -> f64 {
        self.pilot_length as f64 * self.tx_power.sqrt()
    }
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self::from_dbm(10, 20.0, -87.0, 100e6).expect("valid defaults")
    }
}

pub fn received_snr(beta: f64, params: &ScenarioParams) -> f64 {
    beta * params.snr()
}

/// Draws `h ~ CN(0, R)` as `S z` with a fixed square-root factor of `R`.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factor: ComplexMatrix,
}

impl ChannelSampler {
    pub fn new(cov: &SpatialCovariance, clamp_tol: f64) -> Result<Self> {
        Self::from_matrix(&cov.matrix(), clamp_tol)
    }

    pub fn from_matrix(r: &ComplexMatrix, clamp_tol: f64) -> Result<Self> {
        Ok(ChannelSampler {
            factor: linalg::psd_factor(r, clamp_tol)?,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let z = complex_gaussian_vector(rng, self.factor.ncols());
        self.factor.as_matrix() * z
    }
}

pub fn sample_channel<R: Rng + ?Sized>(cov: &SpatialCovariance, rng: &mut R) -> Result<CVector> {
    Ok(ChannelSampler::new(cov, linalg::DEFAULT_CLAMP_TOL)?.sample(rng))
}

/// `y = τ_p √ρ h + w` with `w ~ CN(0, τ_p σ² I)`.
pub fn pilot_observation<R: Rng + ?Sized>(h: &CVector, params: &ScenarioParams, rng: &mut R) -> CVector {
    let noise_std = (params.pilot_length as f64 * params.noise_power).sqrt();
    let w = complex_gaussian_vector(rng, h.len());
    h * Complex64::new(params.pilot_gain(), 0.0) + w * Complex64::new(noise_std, 0.0)
}
