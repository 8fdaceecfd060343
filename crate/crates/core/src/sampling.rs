//! Seeded random primitives shared by generators, optimizers and oracles.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finalizer, used to derive independent sub-stream seeds.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Modified Gram–Schmidt on the rows of a row-major `k×n` array, done twice.
/// Returns `false` if a row collapses.
pub fn orthonormalize_rows(rows: &mut [f64], k: usize, n: usize) -> bool {
    for _pass in 0..2 {
        for a in 0..k {
            for b in 0..a {
                let dot: f64 = (0..n).map(|i| rows[a * n + i] * rows[b * n + i]).sum();
                for i in 0..n {
                    rows[a * n + i] -= dot * rows[b * n + i];
                }
            }
            let norm: f64 = (0..n).map(|i| rows[a * n + i].powi(2)).sum::<f64>().sqrt();
            if !(norm > 1e-300) {
                return false;
            }
            for i in 0..n {
                rows[a * n + i] /= norm;
            }
        }
    }
    true
}

/// A uniformly distributed orthonormal `k×n` frame, row-major.
pub fn random_frame<R: Rng>(rng: &mut R, k: usize, n: usize) -> Vec<f64> {
    loop {
        let mut rows = gaussian_vec(rng, k * n);
        if orthonormalize_rows(&mut rows, k, n) {
            return rows;
        }
    }
}

/// A Haar-random orthogonal matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let rows = random_frame(rng, n, n);
    DMatrix::from_row_slice(n, n, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut r = rng(1, 2);
        let o = random_orthogonal(&mut r, 7);
        let e = &o * o.transpose() - DMatrix::identity(7, 7);
        assert!(e.amax() < 1e-14);
    }

    #[test]
    fn streams_are_reproducible() {
        let a = gaussian_vec(&mut rng(5, 9), 4);
        let b = gaussian_vec(&mut rng(5, 9), 4);
        let c = gaussian_vec(&mut rng(5, 10), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
