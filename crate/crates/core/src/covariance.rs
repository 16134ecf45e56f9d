//! Estimating `Q = R + I/γ` and `R` from `M` pilot snapshots.
//!
//! Snapshots are stored pre-scaled by `1/(τ_p√ρ)`, so that `E[ỹ ỹᴴ] = Q` and
//! the noise subtraction `R̂ = Q̂ − I/γ` is consistent with the estimator
//! normalization.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    snapshots: Vec<CVector>,
}

impl SnapshotBatch {
    /// Raw pilot observations `y[m]`, divided by `pilot_gain = τ_p√ρ`.
    pub fn from_observations(observations: &[CVector], pilot_gain: f64) -> Result<Self> {
        if !(pilot_gain > 0.0) {
            return Err(Error::invalid("pilot gain must be positive"));
        }
        let inv = Complex64::new(1.0 / pilot_gain, 0.0);
        Self::from_normalized(observations.iter().map(|y| y * inv).collect())
    }

    pub fn from_normalized(snapshots: Vec<CVector>) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::invalid("snapshot batch needs M >= 1"));
        };
        let n = first.len();
        if let Some(bad) = snapshots.iter().find(|s| s.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(SnapshotBatch { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_antennas(&self) -> usize {
        self.snapshots[0].len()
    }

    pub fn snapshots(&self) -> &[CVector] {
        &self.snapshots
    }

    /// The first `m` snapshots.
    pub fn prefix(&self, m: usize) -> Result<SnapshotBatch> {
        if m == 0 || m > self.len() {
            return Err(Error::invalid(format!("prefix {m} out of range 1..={}", self.len())));
        }
        Ok(SnapshotBatch {
            snapshots: self.snapshots[..m].to_vec(),
        })
    }

    /// One snapshot per row, `re0,im0,re1,im1,…`, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for s in &self.snapshots {
            let fields: Vec<String> = s.iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut snapshots = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            if record.len() % 2 != 0 {
                return Err(Error::MalformedCsv(format!("row {row}: odd number of fields")));
            }
            let values = record
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::MalformedCsv(format!("row {row}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            snapshots.push(CVector::from_iterator(
                values.len() / 2,
                values.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])),
            ));
        }
        Self::from_normalized(snapshots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceMethod {
    Sample,
    /// `η Q̂ + (1−η) diag(Q̂)`; `eta` has no default.
    Shrinkage { eta: f64 },
    Toeplitz,
}

/// An estimate of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    q: ComplexMatrix,
    method: CovarianceMethod,
}

impl CovarianceEstimate {
    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn method(&self) -> CovarianceMethod {
        self.method
    }

    pub fn n_antennas(&self) -> usize {
        self.q.nrows()
    }

    /// `R̂ = Q̂ − I/γ`.
    pub fn noise_subtract(&self, snr: f64) -> Result<ChannelCovarianceEstimate> {
        noise_subtract(self, snr)
    }
}

/// Running `Σ ỹ ỹᴴ` for incremental accumulation across coherence blocks.
#[derive(Debug, Clone)]
pub struct CorrelationAccumulator {
    sum: DMatrix<Complex64>,
    count: usize,
}

impl CorrelationAccumulator {
    pub fn new(n_antennas: usize) -> Self {
        CorrelationAccumulator {
            sum: DMatrix::zeros(n_antennas, n_antennas),
            count: 0,
        }
    }

    pub fn push(&mut self, snapshot: &CVector) -> Result<()> {
        if snapshot.len() != self.sum.nrows() {
            return Err(Error::LengthMismatch {
                expected: self.sum.nrows(),
                actual: snapshot.len(),
            });
        }
        self.sum.gerc(Complex64::new(1.0, 0.0), snapshot, snapshot, Complex64::new(1.0, 0.0));
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> Result<CovarianceEstimate> {
        if self.count == 0 {
            return Err(Error::invalid("no snapshots accumulated"));
        }
        let q = &self.sum / Complex64::new(self.count as f64, 0.0);
        Ok(CovarianceEstimate {
            q: ComplexMatrix::new(q)?,
            method: CovarianceMethod::Sample,
        })
    }
}

/// `Q̂ = (1/M) Σ ỹ[m] ỹ[m]ᴴ`.
pub fn sample_correlation(batch: &SnapshotBatch) -> Result<CovarianceEstimate> {
    let mut acc = CorrelationAccumulator::new(batch.n_antennas());
    for s in batch.snapshots() {
        acc.push(s)?;
    }
    acc.estimate()
}

pub fn shrinkage_combination(sample: &CovarianceEstimate, eta: f64) -> Result<CovarianceEstimate> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("shrinkage eta must lie in [0, 1], got {eta}")));
    }
    let src = sample.q.as_matrix();
    let n = src.nrows();
    let q = DMatrix::from_fn(n, n, |i, j| if i == j { src[(i, i)] } else { src[(i, j)] * eta });
    Ok(CovarianceEstimate {
        q: ComplexMatrix::from_trusted(q),
        method: CovarianceMethod::Shrinkage { eta },
    })
}

/// Lags of the diagonal-averaged estimate: `lag[k]` is the mean of the
/// `k`-th sub-diagonal (equivalently, the conjugate mean of the `k`-th
/// super-diagonal). The zero lag is forced real.
pub fn toeplitz_lags(q: &ComplexMatrix) -> Vec<Complex64> {
    let m = q.as_matrix();
    let n = m.nrows();
    let mut lags = Vec::with_capacity(n);
    for k in 0..n {
        let count = (n - k) as f64;
        let mut lower = Complex64::new(0.0, 0.0);
        let mut upper = Complex64::new(0.0, 0.0);
        for i in 0..n - k {
            lower += m[(i + k, i)];
            upper += m[(i, i + k)];
        }
        lags.push(0.5 * (lower + upper.conj()) / count);
    }
    if let Some(l0) = lags.first_mut() {
        l0.im = 0.0;
    }
    lags
}

/// Projects `Q̂` onto Hermitian Toeplitz matrices by diagonal averaging.
pub fn toeplitz_average(sample: &CovarianceEstimate) -> CovarianceEstimate {
    let lags = toeplitz_lags(&sample.q);
    CovarianceEstimate {
        q: linalg::toeplitz_hermitian(&lags),
        method: CovarianceMethod::Toeplitz,
    }
}

pub fn estimate(batch: &SnapshotBatch, method: CovarianceMethod) -> Result<CovarianceEstimate> {
    let sample = sample_correlation(batch)?;
    match method {
        CovarianceMethod::Sample => Ok(sample),
        CovarianceMethod::Shrinkage { eta } => shrinkage_combination(&sample, eta),
        CovarianceMethod::Toeplitz => Ok(toeplitz_average(&sample)),
    }
}

/// `R̂ = Q̂ − I/γ`. May be indefinite; nothing is clamped here.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCovarianceEstimate {
    r: ComplexMatrix,
    method: CovarianceMethod,
}

impl ChannelCovarianceEstimate {
    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn method(&self) -> CovarianceMethod {
        self.method
    }

    /// First column `[R̂]_{n,0}`; the full Toeplitz generator when the
    /// estimate came from diagonal averaging.
    pub fn lags(&self) -> Vec<Complex64> {
        self.r.as_matrix().column(0).iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let evd = linalg::hermitian_evd(&self.r)?;
        Ok(evd.eigenvalues.last().copied().unwrap_or(0.0))
    }

    pub fn is_indefinite(&self) -> Result<bool> {
        Ok(self.min_eigenvalue()? < 0.0)
    }
}

pub fn noise_subtract(estimate: &CovarianceEstimate, snr: f64) -> Result<ChannelCovarianceEstimate> {
    if !(snr > 0.0) {
        return Err(Error::invalid("SNR must be positive"));
    }
    Ok(ChannelCovarianceEstimate {
        r: estimate.q.add_identity(-1.0 / snr),
        method: estimate.method,
    })
}
