//! Seeded random saddle point systems.
//!
//! Every generator draws from [`SplitMix64`], a 64-bit-state generator whose
//! output sequence is fixed by its published algorithm, so the same seed gives
//! the same systems on every platform.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
pub use rand_xoshiro::SplitMix64;

use crate::dense::ops::{orthonormalize, singular_values};
use crate::dense::DenseMatrix;
use crate::error::Result;

use super::{validate, SaddleSystem, SystemKind};

/// Largest primal dimension produced by the random generators.
pub const MAX_N: usize = 12;
/// Largest dual dimension produced by the random generators.
pub const MAX_M: usize = 8;

/// Draws of `B` with `sigma_max / sigma_min` above this are rejected, which
/// keeps `cond(S) <= 10^4 * MAX_COND_B^2` and the spectral checks meaningful
/// at 1e-8 relative accuracy.
pub const MAX_COND_B: f64 = 100.0;

/// Spectrum of random SPD matrices is log-uniform on `[10^-LOG_SPREAD, 10^LOG_SPREAD]`.
const LOG_SPREAD: f64 = 2.0;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Independent seed for trial `t` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    let mut r = SplitMix64::seed_from_u64(seed ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    r.random()
}

pub fn gaussian_vec(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, gaussian_vec(rng, rows * cols))
        .expect("gaussian samples are finite")
}

/// Gaussian `m x n` matrix with `cond <= MAX_COND_B`, by rejection.
pub fn well_conditioned_gaussian(rng: &mut SplitMix64, m: usize, n: usize) -> DenseMatrix {
    loop {
        let b = gaussian_matrix(rng, m, n);
        let sv = singular_values(&b).expect("finite Gaussian matrix");
        if sv[m - 1] > 0.0 && sv[0] / sv[m - 1] <= MAX_COND_B {
            return b;
        }
    }
}

/// `Q diag(lambda) Q^t` with Haar-like `Q` and log-uniform `lambda`.
pub fn random_spd(rng: &mut SplitMix64, n: usize) -> DenseMatrix {
    let q = orthonormalize(&gaussian_matrix(rng, n, n));
    let lambda: Vec<f64> = (0..n)
        .map(|_| 10f64.powf(rng.random_range(-LOG_SPREAD..=LOG_SPREAD)))
        .collect();
    q.matmul(&DenseMatrix::from_diag(&lambda)).matmul_t(&q).symmetrize()
}

/// Random SPD system with the given dimensions and a well-conditioned `B`.
pub fn random_spd_system_sized(seed: u64, n: usize, m: usize) -> Result<SaddleSystem> {
    assert!(m <= n && m > 0, "need 0 < m <= n");
    let mut r = rng(seed);
    loop {
        let a = random_spd(&mut r, n);
        let b = well_conditioned_gaussian(&mut r, m, n);
        let f = gaussian_vec(&mut r, n);
        let g = gaussian_vec(&mut r, m);
        match validate(a, b, f, g) {
            Ok(sys) if sys.kind() == SystemKind::Spd => return Ok(sys),
            Ok(_) | Err(crate::Error::BNotSurjective { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Random SPD system with `2 <= n <= 12` and `1 <= m <= min(n, 8)`.
pub fn random_spd_system(seed: u64) -> Result<SaddleSystem> {
    let mut r = rng(seed);
    let n = r.random_range(2..=MAX_N);
    let m = r.random_range(1..=n.min(MAX_M));
    random_spd_system_sized(r.random(), n, m)
}

/// Random semi-SPD system with `A = R^t R` for a Gaussian `R` of rank
/// `r < n`, so `dim N(A) = n - r` lies in `[1, m - 1]`, and a
/// well-conditioned Gaussian `B`. Draws that fail validation are resampled.
pub fn random_semispd_system_sized(seed: u64, n: usize, m: usize, nullity: usize) -> Result<SaddleSystem> {
    assert!(m <= n && nullity >= 1 && nullity < m, "need 1 <= nullity < m <= n");
    let mut r = rng(seed);
    loop {
        let rr = gaussian_matrix(&mut r, n - nullity, n);
        let a = rr.t_matmul(&rr).symmetrize();
        let b = well_conditioned_gaussian(&mut r, m, n);
        let f = gaussian_vec(&mut r, n);
        let g = gaussian_vec(&mut r, m);
        match validate(a, b, f, g) {
            Ok(sys) if sys.kind() == SystemKind::SemiSpd => return Ok(sys),
            Ok(_)
            | Err(crate::Error::BNotSurjective { .. })
            | Err(crate::Error::IllPosed)
            | Err(crate::Error::NotPsd { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Random semi-SPD system with `3 <= n <= 12`, `2 <= m <= min(n, 8)`.
pub fn random_semispd_system(seed: u64) -> Result<SaddleSystem> {
    let mut r = rng(seed);
    let n = r.random_range(3..=MAX_N);
    let m = r.random_range(2..=n.min(MAX_M));
    let nullity = r.random_range(1..m);
    random_semispd_system_sized(r.random(), n, m, nullity)
}
