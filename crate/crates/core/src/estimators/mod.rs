//! Linear channel estimators `ĥ = A y`.
//!
//! Every estimator is precomputed once into an [`EstimatorOperator`] and then
//! applied to pilot observations. The operator stores the normalized filter
//! `W = τ_p√ρ · A` in whatever structure makes `apply` cheap:
//!
//! | kind | filter                     | apply cost |
//! |------|----------------------------|------------|
//! | MMSE | dense `R Q⁻¹`              | `N²`       |
//! | LS   | identity                   | `N`        |
//! | LoS  | `c · a aᴴ`                 | `N`        |
//! | ISO  | `Ū D Ūᴴ`, rank `r`         | `N·r`      |
//! | DFT  | `F diag(Λ/(Λ+1/γ)) Fᴴ`     | `N log N`  |

mod circulant;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use circulant::{circulant_approximation, circulant_eigenvalues, CirculantSpectrum, GENERATOR_TOL};

use crate::channel::{array_response, ScenarioParams, UlaGeometry};
use crate::error::{Error, Result};
use crate::linalg::{self, CVector, ComplexMatrix, DftDirection, UnitaryDft};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "LS")]
    Ls,
    #[serde(rename = "LoS")]
    Los,
    #[serde(rename = "ISO")]
    Iso,
    #[serde(rename = "DFT")]
    Dft,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Mmse,
        EstimatorKind::Ls,
        EstimatorKind::Los,
        EstimatorKind::Iso,
        EstimatorKind::Dft,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Mmse => "MMSE",
            EstimatorKind::Ls => "LS",
            EstimatorKind::Los => "LoS",
            EstimatorKind::Iso => "ISO",
            EstimatorKind::Dft => "DFT",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Asymptotic cost of one `apply`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostClass {
    Linear,
    LogLinear,
    RankLinear,
    Quadratic,
}

/// Diagnostics attached to an operator built from estimated statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorFlags {
    /// Negative circulant eigenvalues set to zero (DFT kind).
    pub clamped_eigenvalues: usize,
    /// Diagonal load added after a failed solve (MMSE kind).
    pub diagonal_load: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum Filter {
    Dense(ComplexMatrix),
    Identity,
    RankOne {
        steering: CVector,
        coeff: f64,
    },
    Subspace {
        basis: DMatrix<Complex64>,
        weights: Vec<f64>,
    },
    Circulant {
        weights: Vec<f64>,
        spectrum: CirculantSpectrum,
        dft: UnitaryDft,
    },
}

/// Precomputed linear estimator. Immutable and `Sync`.
#[derive(Debug, Clone)]
pub struct EstimatorOperator {
    kind: EstimatorKind,
    n: usize,
    pilot_gain: f64,
    filter: Filter,
    flags: OperatorFlags,
}

impl EstimatorOperator {
    /// Operator from an explicit normalized filter `W`, so that `A = W / (τ_p√ρ)`.
    pub fn from_dense_filter(kind: EstimatorKind, filter: ComplexMatrix, params: &ScenarioParams) -> Result<Self> {
        if !filter.is_square() {
            return Err(Error::NotSquare {
                rows: filter.nrows(),
                cols: filter.ncols(),
            });
        }
        Ok(EstimatorOperator {
            kind,
            n: filter.nrows(),
            pilot_gain: params.pilot_gain(),
            filter: Filter::Dense(filter),
            flags: OperatorFlags::default(),
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn n_antennas(&self) -> usize {
        self.n
    }

    pub fn pilot_gain(&self) -> f64 {
        self.pilot_gain
    }

    pub fn flags(&self) -> OperatorFlags {
        self.flags
    }

    pub fn cost_class(&self) -> CostClass {
        match self.filter {
            Filter::Dense(_) => CostClass::Quadratic,
            Filter::Identity | Filter::RankOne { .. } => CostClass::Linear,
            Filter::Subspace { .. } => CostClass::RankLinear,
            Filter::Circulant { .. } => CostClass::LogLinear,
        }
    }

    /// Circulant spectrum for the DFT kind.
    pub fn spectrum(&self) -> Option<&CirculantSpectrum> {
        match &self.filter {
            Filter::Circulant { spectrum, .. } => Some(spectrum),
            _ => None,
        }
    }

    pub(crate) fn filter(&self) -> &Filter {
        &self.filter
    }

    pub fn apply(&self, y: &CVector) -> Result<CVector> {
        if y.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: y.len(),
            });
        }
        let inv_gain = Complex64::new(1.0 / self.pilot_gain, 0.0);
        let out = match &self.filter {
            Filter::Dense(w) => w.as_matrix() * y * inv_gain,
            Filter::Identity => y * inv_gain,
            Filter::RankOne { steering, coeff } => {
                let proj = steering.dotc(y) * (*coeff);
                steering * (proj * inv_gain)
            }
            Filter::Subspace { basis, weights } => {
                let mut coords = basis.adjoint() * y;
                for (c, w) in coords.iter_mut().zip(weights) {
                    *c *= *w;
                }
                basis * coords * inv_gain
            }
            Filter::Circulant { weights, dft, .. } => {
                let mut out = y.clone();
                let buf = out.as_mut_slice();
                let mut scratch = dft.scratch();
                dft.process_with_scratch(buf, &mut scratch, DftDirection::Forward);
                // Two unnormalized transforms contribute a factor N.
                let scale = inv_gain / self.n as f64;
                for (b, w) in buf.iter_mut().zip(weights) {
                    *b *= *w * scale;
                }
                dft.process_with_scratch(buf, &mut scratch, DftDirection::Inverse);
                out
            }
        };
        Ok(out)
    }

    /// Dense `N×N` matrix `A` realizing [`apply`](Self::apply). Test and
    /// diagnostics use only; O(N²) memory.
    pub fn dense_materialization(&self) -> ComplexMatrix {
        let n = self.n;
        let inv_gain = Complex64::new(1.0 / self.pilot_gain, 0.0);
        let m = match &self.filter {
            Filter::Dense(w) => w.as_matrix() * inv_gain,
            Filter::Identity => DMatrix::identity(n, n) * inv_gain,
            Filter::RankOne { steering, coeff } => steering * steering.adjoint() * (inv_gain * *coeff),
            Filter::Subspace { basis, weights } => {
                let mut scaled = basis.clone();
                for (j, w) in weights.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(*w);
                }
                scaled * basis.adjoint() * inv_gain
            }
            Filter::Circulant { .. } => {
                let mut out = DMatrix::zeros(n, n);
                let mut e = CVector::zeros(n);
                for j in 0..n {
                    e[j] = Complex64::new(1.0, 0.0);
                    let col = self.apply(&e).expect("length matches");
                    out.set_column(j, &col);
                    e[j] = Complex64::new(0.0, 0.0);
                }
                out
            }
        };
        ComplexMatrix::from_trusted(m)
    }
}

/// MMSE: `A = R (R + I/γ)⁻¹ / (τ_p√ρ)`.
///
/// `r` may be an estimate (possibly indefinite); no regularization is added.
pub fn mmse_precompute(r: &ComplexMatrix, params: &ScenarioParams) -> Result<EstimatorOperator> {
    let q = r.add_identity(1.0 / params.snr());
    mmse_from_parts(r, &q, params, None)
}

/// [`mmse_precompute`], retrying once with the diagonal load
/// `1e-12 · |tr Q| / N` when the solve fails. The load is recorded in the
/// operator flags.
pub fn mmse_precompute_with_fallback(r: &ComplexMatrix, params: &ScenarioParams) -> Result<EstimatorOperator> {
    let q = r.add_identity(1.0 / params.snr());
    match mmse_from_parts(r, &q, params, None) {
        Err(Error::IllConditioned { .. }) => {
            let n = q.nrows().max(1) as f64;
            let load = 1e-12 * q.trace().re.abs() / n;
            mmse_from_parts(r, &q.add_identity(load), params, Some(load))
        }
        other => other,
    }
}

fn mmse_from_parts(
    r: &ComplexMatrix,
    q: &ComplexMatrix,
    params: &ScenarioParams,
    load: Option<f64>,
) -> Result<EstimatorOperator> {
    // Q⁻¹R solved directly; R Q⁻¹ = (Q⁻¹ R)ᴴ for Hermitian R and Q.
    let x = linalg::solve_hermitian(q, r)?;
    let mut op = EstimatorOperator::from_dense_filter(EstimatorKind::Mmse, x.adjoint(), params)?;
    op.flags.diagonal_load = load;
    Ok(op)
}

pub fn ls_operator(n_antennas: usize, params: &ScenarioParams) -> EstimatorOperator {
    EstimatorOperator {
        kind: EstimatorKind::Ls,
        n: n_antennas,
        pilot_gain: params.pilot_gain(),
        filter: Filter::Identity,
        flags: OperatorFlags::default(),
    }
}

/// LoS: MMSE under the single-plane-wave covariance `β a aᴴ`, with the nominal
/// angles assumed known.
pub fn los_precompute(
    geom: &UlaGeometry,
    azimuth: f64,
    elevation: f64,
    beta: f64,
    params: &ScenarioParams,
) -> EstimatorOperator {
    let n = geom.n_antennas();
    let bg = beta * params.snr();
    EstimatorOperator {
        kind: EstimatorKind::Los,
        n,
        pilot_gain: params.pilot_gain(),
        filter: Filter::RankOne {
            steering: array_response(geom, azimuth, elevation),
            coeff: bg / (1.0 + n as f64 * bg),
        },
        flags: OperatorFlags::default(),
    }
}

/// Dominant eigenspace of the isotropic-scattering correlation
/// `[S]_{m,l} = sinc(2(m−l)d/λ)`.
#[derive(Debug, Clone)]
pub struct IsoBasis {
    vectors: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl IsoBasis {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `N × r`, orthonormal columns.
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

pub fn isotropic_correlation(geom: &UlaGeometry) -> ComplexMatrix {
    let n = geom.n_antennas();
    let ratio = geom.spacing() / geom.wavelength();
    let lags: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(sinc(2.0 * k as f64 * ratio), 0.0))
        .collect();
    linalg::toeplitz_hermitian(&lags)
}

/// Keeps eigenpairs with `λ > rank_tol · λ_max`.
pub fn iso_basis(geom: &UlaGeometry, rank_tol: f64) -> Result<IsoBasis> {
    let evd = linalg::hermitian_evd(&isotropic_correlation(geom))?;
    let lmax = evd.eigenvalues[0];
    let rank = evd.eigenvalues.iter().take_while(|&&l| l > rank_tol * lmax).count();
    let vectors = evd.eigenvectors.as_matrix().columns(0, rank).into_owned();
    Ok(IsoBasis {
        vectors: ComplexMatrix::from_trusted(vectors),
        eigenvalues: evd.eigenvalues[..rank].to_vec(),
    })
}

/// ISO: `A = Ū Λ̄ (Λ̄ + I_r/γ)⁻¹ Ūᴴ / (τ_p√ρ)`; with `beta_scale = Some(β)`
/// the spectrum is scaled to `β Λ̄` first.
pub fn iso_precompute(basis: &IsoBasis, params: &ScenarioParams, beta_scale: Option<f64>) -> EstimatorOperator {
    let inv_snr = 1.0 / params.snr();
    let b = beta_scale.unwrap_or(1.0);
    let weights = basis
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = b * l;
            l / (l + inv_snr)
        })
        .collect();
    EstimatorOperator {
        kind: EstimatorKind::Iso,
        n: basis.vectors.nrows(),
        pilot_gain: params.pilot_gain(),
        filter: Filter::Subspace {
            basis: basis.vectors.as_matrix().clone(),
            weights,
        },
        flags: OperatorFlags::default(),
    }
}

/// DFT-based estimator from the covariance lags `r(n) = [R]_{n,0}`.
///
/// Builds the circulant approximation, takes its DFT spectrum, clamps
/// negative eigenvalues to zero and stores the per-bin Wiener weights
/// `Λ/(Λ + 1/γ)`. O(N log N) overall.
pub fn dft_precompute(lags: &[Complex64], params: &ScenarioParams) -> Result<EstimatorOperator> {
    let n = lags.len();
    let dft = UnitaryDft::new(n)?;
    let generator = circulant_approximation(lags);
    let spectrum = circulant::circulant_eigenvalues_with(&generator, &dft)?;
    let inv_snr = 1.0 / params.snr();
    let weights = spectrum
        .raw_eigenvalues()
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            l / (l + inv_snr)
        })
        .collect();
    let clamped = spectrum.n_clamped();
    Ok(EstimatorOperator {
        kind: EstimatorKind::Dft,
        n,
        pilot_gain: params.pilot_gain(),
        filter: Filter::Circulant {
            weights,
            spectrum,
            dft,
        },
        flags: OperatorFlags {
            clamped_eigenvalues: clamped,
            diagonal_load: None,
        },
    })
}
