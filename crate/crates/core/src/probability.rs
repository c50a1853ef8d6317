//! Multinomial likelihoods and exhaustive enumeration of the observation
//! space.

use crate::error::{Error, Result};
use crate::model::{ModelDims, ObservationMatrix, State};
use crate::numerics::{binomial_u128, ln_factorial};

/// Largest observation space the exact engine will enumerate by default.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Multinomial probability of seeing `counts` in `m` draws from `probs`.
///
/// Computed in log space; `0^0` counts as 1, so a zero count on a
/// zero-probability rating is harmless while a positive one gives 0.
pub fn column_likelihood(counts: &[u32], probs: &[f64], m: u32) -> Result<f64> {
    if counts.len() != probs.len() {
        return Err(Error::mismatch(
            format!("{} probabilities", probs.len()),
            format!("{} counts", counts.len()),
        ));
    }
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total != u64::from(m) {
        return Err(Error::InvalidObservation(format!(
            "counts sum to {total}, expected {m}"
        )));
    }
    let mut log_p = ln_factorial(u64::from(m));
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return Ok(0.0);
        }
        log_p += f64::from(c) * p.ln() - ln_factorial(u64::from(c));
    }
    Ok(log_p.exp())
}

/// `Pr[B | S]`: product of independent per-product multinomials.
pub fn observation_likelihood(b: &ObservationMatrix, s: &State) -> Result<f64> {
    b.check_matches(s)?;
    let mut p = 1.0;
    for (counts, probs) in b.columns().iter().zip(s.columns()) {
        p *= column_likelihood(counts, probs, b.m())?;
        if p == 0.0 {
            break;
        }
    }
    Ok(p)
}

/// All ways to split `m` observations over `parts` ratings, in descending
/// lexicographic order (`(m, 0, …)` first, `(…, 0, m)` last).
pub fn compositions(m: u32, parts: usize) -> Vec<Vec<u32>> {
    fn fill(remaining: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == current.len() {
            current[slot] = remaining;
            out.push(current.clone());
            return;
        }
        for c in (0..=remaining).rev() {
            current[slot] = c;
            fill(remaining - c, slot + 1, current, out);
        }
    }
    if parts == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    fill(m, 0, &mut vec![0; parts], &mut out);
    out
}

/// Number of matrices in `B_m` for `dims`: `C(m+n_r−1, n_r−1)^{n_d}`, or
/// `None` if that overflows `u128`.
pub fn observation_space_size(dims: &ModelDims) -> Option<u128> {
    let per_column = binomial_u128(
        u64::from(dims.m) + dims.n_ratings as u64 - 1,
        dims.n_ratings as u64 - 1,
    )?;
    per_column.checked_pow(u32::try_from(dims.n_products).ok()?)
}

/// The set `B_m` of every observation matrix with column sums `m`.
///
/// Matrices are not stored; each is identified by one composition index per
/// product, ordered like an odometer with the last product turning fastest.
#[derive(Debug, Clone)]
pub struct ObservationSpace {
    dims: ModelDims,
    compositions: Vec<Vec<u32>>,
    len: usize,
}

pub fn enumerate_observations(dims: ModelDims) -> Result<ObservationSpace> {
    enumerate_observations_with_cap(dims, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_observations_with_cap(dims: ModelDims, cap: u64) -> Result<ObservationSpace> {
    let dims = ModelDims::new(dims.n_products, dims.n_ratings, dims.m)?;
    let size = observation_space_size(&dims).unwrap_or(u128::MAX);
    if size > u128::from(cap) {
        return Err(Error::EnumerationCapExceeded { size, cap });
    }
    let len = usize::try_from(size).map_err(|_| Error::EnumerationCapExceeded { size, cap })?;
    Ok(ObservationSpace {
        dims,
        compositions: compositions(dims.m, dims.n_ratings),
        len,
    })
}

impl ObservationSpace {
    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distinct per-product count vectors, shared by every column.
    pub fn compositions(&self) -> &[Vec<u32>] {
        &self.compositions
    }

    /// Composition index of each product for the `i`-th matrix.
    pub fn composition_indices(&self, mut i: usize) -> Vec<usize> {
        let k = self.compositions.len();
        let mut idx = vec![0; self.dims.n_products];
        for slot in idx.iter_mut().rev() {
            *slot = i % k;
            i /= k;
        }
        idx
    }

    pub fn matrix_from_indices(&self, indices: &[usize]) -> ObservationMatrix {
        let columns = indices
            .iter()
            .map(|&c| self.compositions[c].clone())
            .collect();
        ObservationMatrix::from_columns(columns).expect("compositions share the same sum")
    }

    pub fn matrix(&self, i: usize) -> ObservationMatrix {
        self.matrix_from_indices(&self.composition_indices(i))
    }

    /// Composition-index tuples in enumeration order.
    pub fn index_tuples(&self) -> IndexTuples {
        IndexTuples {
            radix: self.compositions.len(),
            current: vec![0; self.dims.n_products],
            remaining: self.len,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ObservationMatrix> + '_ {
        self.index_tuples()
            .map(|idx| self.matrix_from_indices(&idx))
    }

    /// `Pr[B | S]` for every matrix, in enumeration order.
    pub fn likelihoods(&self, state: &State) -> Result<Vec<f64>> {
        let table = self.column_likelihood_table(state)?;
        Ok(self
            .index_tuples()
            .map(|idx| idx.iter().enumerate().map(|(d, &c)| table[d][c]).product())
            .collect())
    }

    /// `table[d][c]`: likelihood of composition `c` for product `d`.
    pub fn column_likelihood_table(&self, state: &State) -> Result<Vec<Vec<f64>>> {
        if state.n_products() != self.dims.n_products || state.n_ratings() != self.dims.n_ratings {
            return Err(Error::mismatch(
                format!("{}x{} state", self.dims.n_ratings, self.dims.n_products),
                format!("{}x{} state", state.n_ratings(), state.n_products()),
            ));
        }
        state
            .columns()
            .iter()
            .map(|probs| {
                self.compositions
                    .iter()
                    .map(|counts| column_likelihood(counts, probs, self.dims.m))
                    .collect()
            })
            .collect()
    }
}

/// Odometer over composition indices.
#[derive(Debug, Clone)]
pub struct IndexTuples {
    radix: usize,
    current: Vec<usize>,
    remaining: usize,
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current.clone();
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.radix {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for IndexTuples {}
