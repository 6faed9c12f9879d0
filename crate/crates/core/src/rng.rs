//! Seed derivation and the random primitives shared by every module.
//!
//! All randomness flows from one master seed. A task identified by
//! `(stream, index)` gets `derive_seed(master, stream, index)`, a splitmix64
//! mix of the three words, so serial and parallel schedules draw identical
//! streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matlin::{ComplexMatrix, HermitianMatrix, C64};

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with unit total variance.
pub fn complex_normal(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn real_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn uniform(rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    rng.random::<f64>()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `G G*` with `G` a `dim × rank` complex Gaussian matrix.
pub fn random_psd(dim: usize, rank: usize, rng: &mut Rng) -> HermitianMatrix {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    HermitianMatrix::gram(&g)
}

/// PSD test population: 80% full rank, 10% rank one, 10% near-singular.
pub fn random_psd_mixed(dim: usize, rng: &mut Rng) -> HermitianMatrix {
    let u = uniform(rng);
    if u < 0.1 {
        random_psd(dim, 1, rng)
    } else if u < 0.2 {
        let mut g = gaussian_matrix(dim, dim, rng);
        let col = (uniform(rng) * dim as f64) as usize % dim;
        for r in 0..dim {
            g[(r, col)] *= 1e-6;
        }
        HermitianMatrix::gram(&g)
    } else {
        random_psd(dim, dim, rng)
    }
}

/// Haar-random isometry `C^cols -> C^rows` (orthonormal columns), `rows >= cols`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut v = gaussian_matrix(rows, cols, rng);
    // modified Gram-Schmidt, two passes
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let mut dot = C64::new(0.0, 0.0);
                for r in 0..rows {
                    dot += v[(r, k)].conj() * v[(r, j)];
                }
                for r in 0..rows {
                    let vk = v[(r, k)];
                    v[(r, j)] -= dot * vk;
                }
            }
        }
        let norm = (0..rows).map(|r| v[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..rows {
            v[(r, j)] /= norm;
        }
    }
    v
}
