//! Seeded random streams.
//!
//! Every Monte-Carlo trial owns an independent ChaCha8 stream whose seed is
//! derived from `(master_seed, experiment, sweep_index, trial_index)`:
//!
//! ```text
//! s0 = splitmix64(master_seed)
//! s1 = splitmix64(s0 ^ experiment_tag)
//! s2 = splitmix64(s1 ^ sweep_index)
//! s3 = splitmix64(s2 ^ trial_index)
//! ```
//!
//! where `splitmix64` is the standard finalizer (add `0x9E3779B97F4A7C15`,
//! then the two xor-shift-multiply rounds). The 64-bit `s3` seeds
//! `ChaCha8Rng::seed_from_u64`. Work can therefore be scheduled on any number
//! of threads without changing a single draw.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CVector;

pub type TrialRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one trial inside the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub experiment: u64,
    pub sweep_index: u64,
    pub trial_index: u64,
}

impl StreamKey {
    pub fn seed(&self) -> u64 {
        let s0 = splitmix64(self.master_seed);
        let s1 = splitmix64(s0 ^ self.experiment);
        let s2 = splitmix64(s1 ^ self.sweep_index);
        splitmix64(s2 ^ self.trial_index)
    }

    pub fn rng(&self) -> TrialRng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }

    /// Human-readable path printed when a trial fails.
    pub fn path(&self) -> String {
        format!(
            "seed={}/experiment={}/sweep={}/trial={} (stream seed {:#018x})",
            self.master_seed,
            self.experiment,
            self.sweep_index,
            self.trial_index,
            self.seed()
        )
    }
}

/// One draw from CN(0, 1): independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    DVector::from_fn(len, |_, _| complex_gaussian(rng))
}
