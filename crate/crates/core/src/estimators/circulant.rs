//! Circulant approximation of a Hermitian Toeplitz covariance and its DFT
//! spectrum.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{DftDirection, UnitaryDft};

/// Relative tolerance on `c(N−n) = c(n)^*`.
pub const GENERATOR_TOL: f64 = 1e-9;

/// Best circulant fit (in Frobenius norm) to the Toeplitz matrix with lags `r`:
///
/// `c(0) = r(0)`, `c(n) = ((N−n) r(n) + n r(N−n)^*) / N`.
pub fn circulant_approximation(lags: &[Complex64]) -> Vec<Complex64> {
    let n = lags.len();
    if n == 0 {
        return Vec::new();
    }
    let r0 = lags[0];
    if r0.im.abs() > 1e-12 * r0.norm().max(f64::MIN_POSITIVE) {
        log::warn!("zero-lag covariance {r0} is not real; using its real part");
    }
    let nf = n as f64;
    let mut gen = Vec::with_capacity(n);
    gen.push(Complex64::new(r0.re, 0.0));
    for k in 1..n {
        let k_f = k as f64;
        gen.push(((nf - k_f) * lags[k] + k_f * lags[n - k].conj()) / nf);
    }
    gen
}

/// Eigenvalues of the Hermitian circulant generated by `generator`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpectrum {
    generator: Vec<Complex64>,
    raw_eigenvalues: Vec<f64>,
    clamped: Vec<bool>,
}

impl CirculantSpectrum {
    pub fn generator(&self) -> &[Complex64] {
        &self.generator
    }

    pub fn len(&self) -> usize {
        self.generator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generator.is_empty()
    }

    /// Eigenvalues before clamping; may be negative for estimated covariances.
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.raw_eigenvalues
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn n_clamped(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }

    /// Eigenvalues with negative entries set to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.raw_eigenvalues.iter().map(|&l| l.max(0.0)).collect()
    }
}

/// `Λ[n] = Σ_m c(m) e^{−j2πmn/N}`, the eigenvalue paired with column `n` of
/// the inverse-DFT matrix.
pub fn circulant_eigenvalues(generator: &[Complex64]) -> Result<CirculantSpectrum> {
    let dft = UnitaryDft::new(generator.len())?;
    circulant_eigenvalues_with(generator, &dft)
}

pub(crate) fn circulant_eigenvalues_with(generator: &[Complex64], dft: &UnitaryDft) -> Result<CirculantSpectrum> {
    let n = generator.len();
    if n != dft.len() {
        return Err(Error::LengthMismatch {
            expected: dft.len(),
            actual: n,
        });
    }
    let scale = generator.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let tol = GENERATOR_TOL * scale.max(f64::MIN_POSITIVE);
    if generator[0].im.abs() > tol {
        return Err(Error::NonHermitianGenerator {
            lag: 0,
            defect: generator[0].im.abs(),
        });
    }
    for k in 1..n {
        let defect = (generator[n - k] - generator[k].conj()).norm();
        if defect > tol {
            return Err(Error::NonHermitianGenerator { lag: k, defect });
        }
    }

    // Symmetrize so the transform is real up to rounding.
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| 0.5 * (generator[k] + generator[(n - k) % n].conj()))
        .collect();
    dft.process_raw(&mut buf, DftDirection::Forward);
    debug_assert!({
        let peak = buf.iter().fold(0.0_f64, |m, z| m.max(z.re.abs()));
        buf.iter().all(|z| z.im.abs() <= 1e-9 * peak.max(f64::MIN_POSITIVE))
    });
    let raw_eigenvalues: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let clamped = raw_eigenvalues.iter().map(|&l| l < 0.0).collect();
    Ok(CirculantSpectrum {
        generator: generator.to_vec(),
        raw_eigenvalues,
        clamped,
    })
}
