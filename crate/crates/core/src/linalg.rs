//! Dense complex linear algebra and unitary DFT primitives.
//!
//! Dense factorizations are delegated to `nalgebra`; transforms to `rustfft`,
//! which handles arbitrary lengths (mixed radix plus Bluestein), since the
//! array size is set by the aperture and is rarely a power of two.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;

/// Relative tolerance used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default relative clamp for slightly negative eigenvalues in [`psd_factor`].
pub const DEFAULT_CLAMP_TOL: f64 = 1e-10;

/// Reciprocal-condition cutoff below which [`solve_hermitian`] refuses.
pub const RCOND_CUTOFF: f64 = 1e-14;

/// A dense complex matrix whose entries are all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                let z = inner[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(ComplexMatrix(inner))
    }

    /// Wraps a matrix produced by arithmetic on already-validated inputs.
    pub(crate) fn from_trusted(inner: DMatrix<Complex64>) -> Self {
        debug_assert!(inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        ComplexMatrix(inner)
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &entries)
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.ncols(),
                actual: v.len(),
            });
        }
        Ok(&self.0 * v)
    }

    /// `self + shift * I`.
    pub fn add_identity(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows().min(m.ncols()) {
            m[(i, i)] += shift;
        }
        ComplexMatrix(m)
    }

    /// `‖M − Mᴴ‖_F / ‖M‖_F` (zero for the zero matrix).
    pub fn hermitian_defect(&self) -> f64 {
        let norm = self.0.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.0 - self.0.adjoint()).norm() / norm
    }

    fn ensure_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(())
    }
}

/// Hermitian Toeplitz matrix with `[T]_{m,l} = lags[m−l]` for `m ≥ l` and
/// `lags[l−m]^*` otherwise.
pub fn toeplitz_hermitian(lags: &[Complex64]) -> ComplexMatrix {
    let n = lags.len();
    ComplexMatrix::from_trusted(DMatrix::from_fn(n, n, |m, l| {
        if m >= l {
            lags[m - l]
        } else {
            lags[l - m].conj()
        }
    }))
}

/// Circulant matrix with `[C]_{m,l} = gen[(m−l) mod N]`.
pub fn circulant(gen: &[Complex64]) -> ComplexMatrix {
    let n = gen.len();
    ComplexMatrix::from_trusted(DMatrix::from_fn(n, n, |m, l| gen[(m + n - l) % n]))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEvd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let u = self.eigenvectors.as_matrix();
        let mut scaled = u.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lam);
        }
        ComplexMatrix::from_trusted(scaled * u.adjoint())
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

pub fn hermitian_evd(m: &ComplexMatrix) -> Result<HermitianEvd> {
    m.ensure_hermitian()?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEvd {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let a = m.as_matrix();
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEvd {
        eigenvalues,
        eigenvectors: ComplexMatrix::new(eigenvectors)?,
    })
}

/// Square-root factor `S` with `S Sᴴ = m`, built from the eigendecomposition.
///
/// Eigenvalues in `[−clamp_tol·λ_max, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_factor(m: &ComplexMatrix, clamp_tol: f64) -> Result<ComplexMatrix> {
    let evd = hermitian_evd(m)?;
    let scale = evd.max_abs_eigenvalue();
    let min = evd.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -clamp_tol * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            max_eigenvalue: scale,
            tolerance: clamp_tol,
        });
    }
    let mut s = evd.eigenvectors.into_inner();
    for (j, &lam) in evd.eigenvalues.iter().enumerate() {
        s.column_mut(j).scale_mut(lam.max(0.0).sqrt());
    }
    Ok(ComplexMatrix::from_trusted(s))
}

/// Solves `m · X = rhs` for Hermitian `m` via LU with partial pivoting.
///
/// Fails with [`Error::IllConditioned`] when the 1-norm reciprocal condition
/// estimate is at or below [`RCOND_CUTOFF`]. No regularization is applied.
pub fn solve_hermitian(m: &ComplexMatrix, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.ensure_hermitian()?;
    if rhs.nrows() != m.nrows() {
        return Err(Error::LengthMismatch {
            expected: m.nrows(),
            actual: rhs.nrows(),
        });
    }
    let a = m.as_matrix();
    let lu = a.clone().lu();
    let rcond = reciprocal_condition(a, &lu);
    if !(rcond > RCOND_CUTOFF) {
        return Err(Error::IllConditioned { rcond });
    }
    let x = lu
        .solve(rhs.as_matrix())
        .ok_or(Error::IllConditioned { rcond: 0.0 })?;
    ComplexMatrix::new(x).map_err(|_| Error::IllConditioned { rcond })
}

/// Hager–Higham estimate of `1 / (‖A‖₁ ‖A⁻¹‖₁)` for Hermitian `A`.
fn reciprocal_condition(a: &DMatrix<Complex64>, lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    let a_norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if a_norm == 0.0 {
        return 0.0;
    }

    let mut x = CVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut inv_norm = 0.0_f64;
    for iter in 0..5 {
        let Some(y) = lu.solve(&x) else { return 0.0 };
        inv_norm = inv_norm.max(y.iter().map(|z| z.norm()).sum());
        let xi = y.map(|z| {
            let r = z.norm();
            if r == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / r
            }
        });
        // A is Hermitian, so A^{-H} = A^{-1}.
        let Some(z) = lu.solve(&xi) else { return 0.0 };
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let ztx = z.dot(&x).re;
        if iter > 0 && zmax <= ztx {
            break;
        }
        x.fill(Complex64::new(0.0, 0.0));
        x[j] = Complex64::new(1.0, 0.0);
    }
    if !inv_norm.is_finite() || inv_norm == 0.0 {
        return 0.0;
    }
    1.0 / (a_norm * inv_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DftDirection {
    /// Multiplication by `Fᴴ`: `out[n] = Σ_m v[m] e^{−j2πmn/N} / √N`.
    Forward,
    /// Multiplication by `F`: `out[m] = Σ_n v[n] e^{+j2πmn/N} / √N`.
    Inverse,
}

/// Planned unitary DFT of a fixed length, shareable across threads.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("DFT length must be at least 1"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(UnitaryDft {
            len,
            forward,
            inverse,
            scratch_len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized in-place transform (rustfft convention, no `1/√N`).
    pub(crate) fn process_raw(&self, buf: &mut [Complex64], dir: DftDirection) {
        self.process_with_scratch(buf, &mut self.scratch(), dir);
    }

    /// Scratch buffer sized for either direction.
    pub(crate) fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.scratch_len]
    }

    pub(crate) fn process_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64], dir: DftDirection) {
        match dir {
            DftDirection::Forward => self.forward.process_with_scratch(buf, scratch),
            DftDirection::Inverse => self.inverse.process_with_scratch(buf, scratch),
        }
    }

    pub fn process(&self, buf: &mut [Complex64], dir: DftDirection) -> Result<()> {
        if buf.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: buf.len(),
            });
        }
        self.process_raw(buf, dir);
        let norm = 1.0 / (self.len as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= norm);
        Ok(())
    }
}

/// One-shot unitary DFT; see [`DftDirection`] for the sign convention.
pub fn dft_unitary(v: &[Complex64], dir: DftDirection) -> Result<Vec<Complex64>> {
    let plan = UnitaryDft::new(v.len())?;
    let mut out = v.to_vec();
    plan.process(&mut out, dir)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    /// Random Hermitian matrix from a deterministic LCG-ish stream.
    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = c(next(), next());
            }
        }
        ComplexMatrix::new((&a + a.adjoint()).scale(0.5)).unwrap()
    }

    #[test]
    fn evd_identity() {
        let evd = hermitian_evd(&ComplexMatrix::identity(3)).unwrap();
        for lam in &evd.eigenvalues {
            assert!((lam - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn evd_two_by_two_closed_form() {
        let m = ComplexMatrix::from_real_row_major(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let evd = hermitian_evd(&m).unwrap();
        assert!((evd.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((evd.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn evd_diagonal_sorted_descending() {
        let m = ComplexMatrix::from_real_diagonal(&[0.0, 5.0, -1.0]).unwrap();
        let evd = hermitian_evd(&m).unwrap();
        assert_eq!(evd.eigenvalues.len(), 3);
        for (got, want) in evd.eigenvalues.iter().zip([5.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn evd_rejects_bad_input() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_evd(&rect), Err(Error::NotSquare { .. })));
        let skew = ComplexMatrix::from_real_row_major(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(hermitian_evd(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn evd_round_trip_random() {
        for n in [2usize, 3, 5, 8, 17, 32, 64] {
            let m = random_hermitian(n, n as u64);
            let evd = hermitian_evd(&m).unwrap();
            let scale = m.frobenius_norm();
            let err = (evd.reconstruct().as_matrix() - m.as_matrix()).norm();
            assert!(err <= 1e-10 * scale, "n={n} reconstruction err {err}");
            let u = evd.eigenvectors.as_matrix();
            let gram = u.adjoint() * u;
            let ortho = (gram - DMatrix::<Complex64>::identity(n, n)).norm();
            assert!(ortho <= 1e-10, "n={n} unitarity err {ortho}");
            assert!(evd.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn non_finite_rejected() {
        let err = ComplexMatrix::from_real_row_major(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn dft_impulse_and_constant() {
        let imp = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for z in dft_unitary(&imp, DftDirection::Forward).unwrap() {
            assert!(close(z, c(0.5, 0.0), 1e-15));
        }
        let ones = [c(1.0, 0.0); 4];
        let out = dft_unitary(&ones, DftDirection::Forward).unwrap();
        assert!(close(out[0], c(2.0, 0.0), 1e-15));
        for z in &out[1..] {
            assert!(z.norm() < 1e-15);
        }
    }

    #[test]
    fn dft_hand_evaluated() {
        let v = [c(1.0, 0.0), c(0.4, 0.0), c(0.2, 0.0), c(0.4, 0.0)];
        let out = dft_unitary(&v, DftDirection::Forward).unwrap();
        for (z, want) in out.iter().zip([2.0, 0.8, 0.4, 0.8]) {
            assert!(close(*z * 2.0, c(want, 0.0), 1e-14));
        }
    }

    #[test]
    fn dft_sign_convention_matches_inverse_dft_matrix() {
        // F has entries e^{+j2πmn/N}/√N, so Inverse(e_1)[m] = e^{+j2πm/N}/√N.
        let n = 5;
        let mut e1 = vec![c(0.0, 0.0); n];
        e1[1] = c(1.0, 0.0);
        let out = dft_unitary(&e1, DftDirection::Inverse).unwrap();
        for (m, z) in out.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let want = Complex64::from_polar(1.0 / (n as f64).sqrt(), phase);
            assert!(close(*z, want, 1e-14));
        }
    }

    #[test]
    fn dft_length_mismatch() {
        let plan = UnitaryDft::new(4).unwrap();
        let mut buf = vec![c(0.0, 0.0); 3];
        assert!(matches!(
            plan.process(&mut buf, DftDirection::Forward),
            Err(Error::LengthMismatch { expected: 4, actual: 3 })
        ));
        assert!(UnitaryDft::new(0).is_err());
    }

    proptest! {
        #[test]
        fn dft_round_trip_and_parseval(
            n in prop::sample::select(vec![1usize, 2, 3, 4, 8, 64, 96, 100]),
            seed in any::<u64>(),
        ) {
            let m = random_hermitian(n, seed);
            let v: Vec<Complex64> = m.as_matrix().column(0).iter().copied().collect();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let fwd = dft_unitary(&v, DftDirection::Forward).unwrap();
            let fnorm: f64 = fwd.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((fnorm - norm).abs() <= 1e-12 * norm.max(1e-300));
            let back = dft_unitary(&fwd, DftDirection::Inverse).unwrap();
            let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-12 * norm.max(1e-300));
        }

        #[test]
        fn solve_residual_well_conditioned(n in 1usize..24, seed in any::<u64>()) {
            // Diagonally dominant Hermitian matrix.
            let m = random_hermitian(n, seed).add_identity(2.0 * n as f64);
            let rhs = ComplexMatrix::new(random_hermitian(n, seed ^ 0xdead).into_inner().columns(0, 1).into_owned()).unwrap();
            let x = solve_hermitian(&m, &rhs).unwrap();
            let resid = (m.as_matrix() * x.as_matrix() - rhs.as_matrix()).norm();
            prop_assert!(resid <= 1e-8 * rhs.frobenius_norm().max(1e-300));
        }
    }

    #[test]
    fn psd_factor_examples() {
        let s = psd_factor(&ComplexMatrix::identity(2), DEFAULT_CLAMP_TOL).unwrap();
        let p = s.as_matrix() * s.as_matrix().adjoint();
        assert!((p - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-14);

        let d = ComplexMatrix::from_real_diagonal(&[4.0, 1.0]).unwrap();
        let s = psd_factor(&d, DEFAULT_CLAMP_TOL).unwrap();
        let p = s.as_matrix() * s.as_matrix().adjoint();
        assert!((p - d.as_matrix()).norm() < 1e-14);

        let a = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let r1 = ComplexMatrix::new(&a * a.adjoint()).unwrap();
        let s = psd_factor(&r1, DEFAULT_CLAMP_TOL).unwrap();
        let p = s.as_matrix() * s.as_matrix().adjoint();
        assert!((p.trace() - c(2.0, 0.0)).norm() < 1e-14);
        let evd = hermitian_evd(&ComplexMatrix::new(p).unwrap()).unwrap();
        assert!(evd.eigenvalues[1].abs() < 1e-14, "rank must be one");
    }

    #[test]
    fn psd_factor_rejects_indefinite() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -0.5]).unwrap();
        assert!(matches!(
            psd_factor(&m, DEFAULT_CLAMP_TOL),
            Err(Error::NotPsd { .. })
        ));
        // Tiny negative values inside the clamp are accepted.
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-12]).unwrap();
        assert!(psd_factor(&m, DEFAULT_CLAMP_TOL).is_ok());
    }

    #[test]
    fn solve_examples() {
        let b = ComplexMatrix::from_row_major(2, 1, &[c(1.0, 2.0), c(-3.0, 0.5)]).unwrap();
        let x = solve_hermitian(&ComplexMatrix::identity(2), &b).unwrap();
        assert!((x.as_matrix() - b.as_matrix()).norm() < 1e-15);

        let two = ComplexMatrix::identity(2).add_identity(1.0);
        let x = solve_hermitian(&two, &b).unwrap();
        assert!((x.as_matrix() - b.as_matrix().scale(0.5)).norm() < 1e-15);

        let m = ComplexMatrix::from_real_row_major(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let rhs = ComplexMatrix::from_real_row_major(2, 1, &[3.0, 3.0]).unwrap();
        let x = solve_hermitian(&m, &rhs).unwrap();
        assert!(close(x.get(0, 0), c(1.0, 0.0), 1e-14));
        assert!(close(x.get(1, 0), c(1.0, 0.0), 1e-14));
    }

    #[test]
    fn solve_reports_singular() {
        let m = ComplexMatrix::from_real_row_major(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let rhs = ComplexMatrix::identity(2);
        match solve_hermitian(&m, &rhs) {
            Err(Error::IllConditioned { rcond }) => assert!(rcond <= RCOND_CUTOFF),
            other => panic!("expected ill-conditioned, got {other:?}"),
        }
        let near = ComplexMatrix::from_real_diagonal(&[1.0, 1e-16]).unwrap();
        assert!(matches!(
            solve_hermitian(&near, &rhs),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn toeplitz_and_circulant_structure() {
        let lags = [c(2.0, 0.0), c(0.5, 0.25), c(0.1, -0.2)];
        let t = toeplitz_hermitian(&lags);
        assert_eq!(t.hermitian_defect(), 0.0);
        assert_eq!(t.get(2, 0), lags[2]);
        assert_eq!(t.get(0, 2), lags[2].conj());
        let gen = [c(1.0, 0.0), c(0.4, 0.1), c(0.4, -0.1)];
        let cm = circulant(&gen);
        assert_eq!(cm.get(1, 0), gen[1]);
        assert_eq!(cm.get(0, 1), gen[2]);
        assert_eq!(cm.hermitian_defect(), 0.0);
    }
}
