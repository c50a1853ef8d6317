//! Seeded random streams and the samplers built on them.
//!
//! Every stochastic routine takes an explicit generator. Independent streams
//! are derived by hashing a tuple of integers into a ChaCha8 seed, so adding
//! or removing one stream never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, State};

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash of a string key.
pub fn key_hash(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Order-sensitive mix of `parts` into one seed.
pub fn stream_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x005E_ED0F_5EED_u64, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream_rng(parts: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(parts))
}

/// Counts from `m` categorical draws over `probs` (one multinomial column).
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], m: u32, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; probs.len()];
    let last = probs.len() - 1;
    for _ in 0..m {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = last;
        for (r, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = r;
                break;
            }
        }
        // Guard against rounding in the cumulative sum landing on a
        // zero-probability tail.
        while probs[chosen] == 0.0 && chosen > 0 {
            chosen -= 1;
        }
        counts[chosen] += 1;
    }
    counts
}

/// Draws an observation matrix with `m` ratings per product from `state`.
pub fn sample_observation<R: Rng + ?Sized>(
    state: &State,
    m: u32,
    rng: &mut R,
) -> ObservationMatrix {
    let columns = state
        .columns()
        .iter()
        .map(|probs| sample_counts(probs, m, rng))
        .collect();
    ObservationMatrix::from_columns(columns).expect("every column has m draws")
}

fn ln_gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0)
            .expect("positive shape")
            .sample(rng)
            .ln()
    } else {
        // Γ(a) = Γ(a+1) · U^{1/a}; stays finite in log space for tiny a.
        let g = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// One Dirichlet draw, computed in log space so very small concentrations do
/// not underflow to an all-zero vector.
pub fn sample_dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alphas.is_empty() || alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet concentrations must be positive: {alphas:?}"
        )));
    }
    let logs: Vec<f64> = alphas.iter().map(|&a| ln_gamma_sample(a, rng)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}
