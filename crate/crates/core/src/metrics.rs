//! Normalized mean square estimation error and box-plot statistics.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{pilot_observation, ChannelSampler, ScenarioParams, SpatialCovariance};
use crate::error::{Error, Result};
use crate::estimators::{circulant_approximation, circulant_eigenvalues, EstimatorKind, EstimatorOperator, Filter};
use crate::linalg::ComplexMatrix;

/// Which statistics an estimator was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Perfect,
    Snapshots(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmseeRecord {
    pub scheme: EstimatorKind,
    pub n_antennas: usize,
    pub l_over_lambda: f64,
    pub sigma_theta: f64,
    pub elevation: f64,
    pub statistics: Statistics,
    pub nmsee: f64,
    pub clamped_eigenvalues: usize,
    pub loaded_solve: bool,
}

/// Closed-form NMSE of a fixed linear estimator `A`:
///
/// `[tr R − 2√ρ τ_p Re tr(R A) + ρ τ_p² tr(A Q Aᴴ)] / tr R`.
///
/// `A` may have been built from estimated statistics; `R` and `Q` are the true
/// ones.
pub fn nmsee_analytic(r: &ComplexMatrix, q: &ComplexMatrix, a: &ComplexMatrix, params: &ScenarioParams) -> Result<f64> {
    let n = r.nrows();
    for m in [q, a] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: m.nrows(),
            });
        }
    }
    let tr_r = r.trace().re;
    if !(tr_r > 0.0) {
        return Err(Error::invalid("tr(R) must be positive"));
    }
    let (rm, am, qm) = (r.as_matrix(), a.as_matrix(), q.as_matrix());
    let tr_ra: Complex64 = (0..n)
        .map(|i| (0..n).map(|j| rm[(i, j)] * am[(j, i)]).sum::<Complex64>())
        .sum();
    let aq = am * qm;
    let tr_aqah: f64 = aq.iter().zip(am.iter()).map(|(x, y)| (x * y.conj()).re).sum();
    let g = params.pilot_gain();
    Ok((tr_r - 2.0 * g * tr_ra.re + g * g * tr_aqah) / tr_r)
}

/// True second-order statistics against which structured NMSE is evaluated.
#[derive(Debug, Clone)]
pub struct ReferenceStatistics {
    lags: Vec<Complex64>,
    r: ComplexMatrix,
    snr: f64,
    trace: f64,
    /// `diag(Fᴴ R F)`, which equals the spectrum of the circulant fit of `R`.
    dft_diagonal: Vec<f64>,
}

impl ReferenceStatistics {
    pub fn new(cov: &SpatialCovariance, params: &ScenarioParams) -> Result<Self> {
        let trace = cov.trace();
        if !(trace > 0.0) {
            return Err(Error::invalid("tr(R) must be positive"));
        }
        let spectrum = circulant_eigenvalues(&circulant_approximation(cov.lags()))?;
        Ok(ReferenceStatistics {
            lags: cov.lags().to_vec(),
            r: cov.matrix(),
            snr: params.snr(),
            trace,
            dft_diagonal: spectrum.raw_eigenvalues().to_vec(),
        })
    }

    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn q(&self) -> ComplexMatrix {
        self.r.add_identity(1.0 / self.snr)
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `aᴴ R a` for a unit-modulus steering vector, from the lags in O(N).
    fn steering_quadratic(&self, a: &crate::linalg::CVector) -> f64 {
        let n = self.lags.len();
        let mut acc = 0.0;
        for m in 0..n {
            for (k, lag) in self.lags.iter().enumerate().take(n - m).skip(1) {
                acc += 2.0 * (a[m + k].conj() * lag * a[m]).re;
            }
        }
        acc + n as f64 * self.lags[0].re
    }
}

/// NMSE of `op` against the true statistics, using the operator's structure
/// (spectral sums for DFT, rank-one and subspace traces for LoS/ISO).
pub fn nmsee(op: &EstimatorOperator, reference: &ReferenceStatistics) -> Result<f64> {
    let n = reference.lags.len();
    if op.n_antennas() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: op.n_antennas(),
        });
    }
    let inv_snr = 1.0 / reference.snr;
    let tr_r = reference.trace;
    // Traces of the normalized filter W = τ_p√ρ A.
    let (tr_rw, tr_wqw) = match op.filter() {
        Filter::Identity => (tr_r, tr_r + n as f64 * inv_snr),
        Filter::RankOne { steering, coeff } => {
            let ara = reference.steering_quadratic(steering);
            (coeff * ara, coeff * coeff * n as f64 * (ara + n as f64 * inv_snr))
        }
        Filter::Subspace { basis, weights } => {
            let ru = reference.r.as_matrix() * basis;
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for (i, w) in weights.iter().enumerate() {
                let uru = basis.column(i).dotc(&ru.column(i)).re;
                t1 += w * uru;
                t2 += w * w * (uru + inv_snr);
            }
            (t1, t2)
        }
        Filter::Circulant { weights, .. } => weights
            .iter()
            .zip(&reference.dft_diagonal)
            .fold((0.0, 0.0), |(t1, t2), (w, l)| (t1 + w * l, t2 + w * w * (l + inv_snr))),
        Filter::Dense(w) => {
            let (rm, wm) = (reference.r.as_matrix(), w.as_matrix());
            let tr_rw: f64 = (0..n)
                .map(|i| (0..n).map(|j| rm[(i, j)] * wm[(j, i)]).sum::<Complex64>().re)
                .sum();
            let mut wq = wm * rm;
            for i in 0..n {
                let col = wm.column(i) * Complex64::new(inv_snr, 0.0);
                let mut target = wq.column_mut(i);
                target += col;
            }
            let tr_wqw: f64 = wq.iter().zip(wm.iter()).map(|(x, y)| (x * y.conj()).re).sum();
            (tr_rw, tr_wqw)
        }
    };
    Ok((tr_r - 2.0 * tr_rw + tr_wqw) / tr_r)
}

/// Monte-Carlo NMSE of several operators over the same `(h, w)` draws.
pub fn nmsee_empirical_many<R: Rng + ?Sized>(
    ops: &[&EstimatorOperator],
    sampler: &ChannelSampler,
    trace_r: f64,
    params: &ScenarioParams,
    n_trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let mut acc = vec![0.0; ops.len()];
    for _ in 0..n_trials {
        let h = sampler.sample(rng);
        let y = pilot_observation(&h, params, rng);
        for (a, op) in acc.iter_mut().zip(ops) {
            *a += (op.apply(&y)? - &h).norm_squared();
        }
    }
    Ok(acc.into_iter().map(|a| a / (n_trials as f64 * trace_r)).collect())
}

pub fn nmsee_empirical<R: Rng + ?Sized>(
    op: &EstimatorOperator,
    cov: &SpatialCovariance,
    params: &ScenarioParams,
    n_trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let sampler = ChannelSampler::new(cov, crate::linalg::DEFAULT_CLAMP_TOL)?;
    Ok(nmsee_empirical_many(&[op], &sampler, cov.trace(), params, n_trials, rng)?[0])
}

/// Box-plot summary with Tukey fences.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
    pub n: usize,
    pub mean: f64,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn outlier_fraction(&self) -> f64 {
        self.outliers.len() as f64 / self.n as f64
    }
}

pub const DEFAULT_WHISKER_K: f64 = 1.5;

/// Quantile of sorted data by linear interpolation between order statistics:
/// position `h = (n−1)p`, value `x[⌊h⌋] + (h−⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Outliers fall outside `[q1 − k·IQR, q3 + k·IQR]`; whiskers sit at the most
/// extreme remaining samples.
pub fn box_stats(samples: &[f64], whisker_k: f64) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::invalid("box statistics need at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("box statistics input contains NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - whisker_k * iqr, q3 + whisker_k * iqr);
    let mut outliers = Vec::new();
    let mut whisker_low = f64::INFINITY;
    let mut whisker_high = f64::NEG_INFINITY;
    for &x in &sorted {
        if x < lo_fence || x > hi_fence {
            outliers.push(x);
        } else {
            whisker_low = whisker_low.min(x);
            whisker_high = whisker_high.max(x);
        }
    }
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
        n: sorted.len(),
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_covariance, QuadratureSpec, ScatteringProfile, UlaGeometry};
    use crate::estimators::{dft_precompute, iso_basis, iso_precompute, los_precompute, ls_operator, mmse_precompute};
    use crate::linalg::{hermitian_evd, solve_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ScenarioParams {
        ScenarioParams::new(10, 0.1, 1e-3, 1e8).unwrap()
    }

    fn setup(n: usize, theta: f64, sigma: f64, beta: f64) -> (UlaGeometry, ScatteringProfile, SpatialCovariance) {
        let g = UlaGeometry::new(n, 0.025, 0.1, 10.0).unwrap();
        let p = ScatteringProfile::new(theta.to_radians(), sigma.to_radians(), beta).unwrap();
        let cov = build_covariance(&g, &p, &QuadratureSpec::default()).unwrap();
        (g, p, cov)
    }

    fn operators(g: &UlaGeometry, prof: &ScatteringProfile, cov: &SpatialCovariance, p: &ScenarioParams) -> Vec<EstimatorOperator> {
        vec![
            mmse_precompute(&cov.matrix(), p).unwrap(),
            ls_operator(g.n_antennas(), p),
            los_precompute(g, 0.0, prof.nominal_elevation(), prof.beta(), p),
            iso_precompute(&iso_basis(g, 1e-6).unwrap(), p, None),
            dft_precompute(cov.lags(), p).unwrap(),
        ]
    }

    #[test]
    fn mmse_closed_form() {
        let p = params();
        let (_, _, cov) = setup(12, -30.0, 10.0, 2e-4);
        let r = cov.matrix();
        let q = r.add_identity(1.0 / p.snr());
        let op = mmse_precompute(&r, &p).unwrap();
        let got = nmsee_analytic(&r, &q, &op.dense_materialization(), &p).unwrap();
        let qinv_r = solve_hermitian(&q, &r).unwrap();
        let rqr = r.as_matrix() * qinv_r.as_matrix();
        let want = 1.0 - rqr.trace().re / r.trace().re;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn ls_closed_form() {
        let p = params();
        let (_, _, cov) = setup(9, -40.0, 5.0, 3e-4);
        let r = cov.matrix();
        let q = r.add_identity(1.0 / p.snr());
        let op = ls_operator(9, &p);
        let got = nmsee_analytic(&r, &q, &op.dense_materialization(), &p).unwrap();
        let want = 9.0 / (p.snr() * r.trace().re);
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn scalar_mmse() {
        let p = ScenarioParams::new(1, 1.0, 1.0, 1.0).unwrap();
        let r = ComplexMatrix::identity(1);
        let q = r.add_identity(1.0);
        let op = mmse_precompute(&r, &p).unwrap();
        let got = nmsee_analytic(&r, &q, &op.dense_materialization(), &p).unwrap();
        assert!((got - 0.5).abs() < 1e-15);
        assert!(nmsee_analytic(&ComplexMatrix::zeros(1, 1), &q, &r, &p).is_err());
    }

    #[test]
    fn structured_matches_dense_for_every_kind() {
        let p = params();
        for (n, theta, sigma) in [(4, -10.0, 2.0), (16, -30.0, 10.0), (33, -55.0, 20.0)] {
            let (g, prof, cov) = setup(n, theta, sigma, 1e-4);
            let reference = ReferenceStatistics::new(&cov, &p).unwrap();
            let q = reference.q();
            for op in operators(&g, &prof, &cov, &p) {
                let fast = nmsee(&op, &reference).unwrap();
                let slow = nmsee_analytic(reference.r(), &q, &op.dense_materialization(), &p).unwrap();
                assert!((fast - slow).abs() < 1e-10 * slow.abs().max(1e-3), "{} N={n}: {fast} vs {slow}", op.kind());
            }
        }
    }

    #[test]
    fn mmse_is_optimal_among_schemes() {
        let p = params();
        for (n, theta, sigma, beta) in [(8, -6.0, 1.0, 1e-5), (24, -45.0, 15.0, 1e-3), (64, -20.0, 30.0, 1e-6)] {
            let (g, prof, cov) = setup(n, theta, sigma, beta);
            let reference = ReferenceStatistics::new(&cov, &p).unwrap();
            let values: Vec<f64> = operators(&g, &prof, &cov, &p)
                .iter()
                .map(|op| nmsee(op, &reference).unwrap())
                .collect();
            assert!(values.iter().all(|v| values[0] <= v + 1e-12), "{values:?}");
        }
    }

    #[test]
    fn unitary_invariance() {
        let p = params();
        let (g, prof, cov) = setup(6, -30.0, 10.0, 1e-4);
        let r = cov.matrix();
        let q = r.add_identity(1.0 / p.snr());
        let a = operators(&g, &prof, &cov, &p)[4].dense_materialization();
        let base = nmsee_analytic(&r, &q, &a, &p).unwrap();
        // Any unitary works; use the eigenvectors of a fixed Hermitian matrix.
        let h = ComplexMatrix::from_real_row_major(6, 6, &(0..36).map(|k| ((k * 7 % 11) as f64).sin()).collect::<Vec<_>>()).unwrap();
        let sym = ComplexMatrix::new((h.as_matrix() + h.as_matrix().adjoint()).scale(0.5)).unwrap();
        let u = hermitian_evd(&sym).unwrap().eigenvectors.into_inner();
        let rot = |m: &ComplexMatrix| ComplexMatrix::new(&u * m.as_matrix() * u.adjoint()).unwrap();
        let rotated = nmsee_analytic(&rot(&r), &rot(&q), &rot(&a), &p).unwrap();
        assert!((base - rotated).abs() < 1e-12);
    }

    #[test]
    fn empirical_agrees_with_analytic() {
        let p = params();
        let (g, prof, cov) = setup(8, -30.0, 10.0, 1e-4);
        let reference = ReferenceStatistics::new(&cov, &p).unwrap();
        let ops = operators(&g, &prof, &cov, &p);
        let refs: Vec<&EstimatorOperator> = ops.iter().collect();
        let sampler = ChannelSampler::new(&cov, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let emp = nmsee_empirical_many(&refs, &sampler, cov.trace(), &p, 50_000, &mut rng).unwrap();
        for (op, e) in ops.iter().zip(emp) {
            let a = nmsee(op, &reference).unwrap();
            assert!((e - a).abs() < 0.03 * a, "{}: empirical {e} analytic {a}", op.kind());
        }
    }

    #[test]
    fn empirical_limits() {
        let (_, _, cov) = setup(4, -30.0, 10.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noiseless = params().with_noise_power(1e-300).unwrap();
        let ls = ls_operator(4, &noiseless);
        assert!(nmsee_empirical(&ls, &cov, &noiseless, 100, &mut rng).unwrap() < 1e-20);

        let p = params();
        let zero = EstimatorOperator::from_dense_filter(EstimatorKind::Mmse, ComplexMatrix::zeros(4, 4), &p).unwrap();
        let v = nmsee_empirical(&zero, &cov, &p, 100_000, &mut rng).unwrap();
        assert!((v - 1.0).abs() < 0.02, "{v}");
        assert!(nmsee_empirical(&zero, &cov, &p, 0, &mut rng).is_err());
    }

    #[test]
    fn box_stats_examples() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.5).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert!(b.outliers.is_empty());
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));

        let b = box_stats(&[7.0; 6], 1.5).unwrap();
        assert_eq!((b.q1, b.median, b.q3, b.whisker_low, b.whisker_high), (7.0, 7.0, 7.0, 7.0, 7.0));
        assert!(b.outliers.is_empty());

        let b = box_stats(&[1.0, 1.0, 1.0, 1.0, 100.0], 1.5).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 1.0);
        assert!((b.outlier_fraction() - 0.2).abs() < 1e-15);

        assert!(box_stats(&[], 1.5).is_err());
        let single = box_stats(&[3.0], 1.5).unwrap();
        assert_eq!(single.median, 3.0);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 25.0);
        assert_eq!(quantile_sorted(&xs, 0.25), 17.5);
        assert_eq!(quantile_sorted(&xs, 1.0), 40.0);
    }
}
