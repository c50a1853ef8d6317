//! Hoeffding sample-size bound for the greedy rule.
//!
//! With `m` observations per product, greedy misses the best product with
//! probability at most `n_d · exp(−m·gap² / (2(n_r−1)²))`, where `gap` is the
//! value difference between the best and second-best products. Inverting
//! gives the number of observations needed for a target miss probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::State;
use crate::sampling::sample_observation;
use crate::strategies::greedy_strategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    pub n_products: usize,
    pub n_ratings: usize,
    pub gap: f64,
    pub delta: f64,
}

impl GapSpec {
    /// `gap` may be zero, in which case no finite sample size exists and
    /// [`min_observations`] reports [`SampleSize::Unbounded`].
    pub fn new(n_products: usize, n_ratings: usize, gap: f64, delta: f64) -> Result<Self> {
        if n_products == 0 {
            return Err(Error::InvalidParameter("need at least one product".into()));
        }
        if n_ratings < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two ratings, got {n_ratings}"
            )));
        }
        let max_gap = (n_ratings - 1) as f64;
        if !(gap.is_finite() && (0.0..=max_gap).contains(&gap)) {
            return Err(Error::InvalidParameter(format!(
                "gap {gap} must lie in [0, {max_gap}]"
            )));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} must lie in (0, 1/2]"
            )));
        }
        Ok(Self {
            n_products,
            n_ratings,
            gap,
            delta,
        })
    }

    /// Gap between the two best products of `state`.
    pub fn from_state(state: &State, delta: f64) -> Result<Self> {
        Self::new(
            state.n_products(),
            state.n_ratings(),
            top_two_gap(state),
            delta,
        )
    }

    fn exponent_rate(&self) -> f64 {
        let spread = (self.n_ratings - 1) as f64;
        self.gap * self.gap / (2.0 * spread * spread)
    }
}

/// Value of the best product minus the value of the runner-up (0 with a
/// single product).
pub fn top_two_gap(state: &State) -> f64 {
    let mut values = state.values();
    values.sort_by(|a, b| b.total_cmp(a));
    match values.as_slice() {
        [best, second, ..] => best - second,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSize {
    Finite(u64),
    Unbounded,
}

impl SampleSize {
    pub fn finite(self) -> Option<u64> {
        match self {
            SampleSize::Finite(m) => Some(m),
            SampleSize::Unbounded => None,
        }
    }
}

/// `n_d · exp(−m·gap² / (2(n_r−1)²))` before clamping.
pub fn miss_probability_bound_raw(spec: &GapSpec, m: u64) -> f64 {
    spec.n_products as f64 * (-(m as f64) * spec.exponent_rate()).exp()
}

/// The Hoeffding miss bound clamped to `[0, 1]`.
pub fn miss_probability_bound(spec: &GapSpec, m: u64) -> f64 {
    miss_probability_bound_raw(spec, m).clamp(0.0, 1.0)
}

/// Smallest `m ≥ 2(n_r−1)² ln(n_d/δ) / gap²`.
///
/// The ceiling is nudged so the result is exactly the first `m` whose
/// [`miss_probability_bound_raw`] is at most `δ`, independent of rounding in
/// the closed form.
pub fn min_observations(spec: &GapSpec) -> SampleSize {
    if spec.gap == 0.0 {
        return SampleSize::Unbounded;
    }
    let exact = (spec.n_products as f64 / spec.delta).ln() / spec.exponent_rate();
    let mut m = exact.ceil().max(0.0) as u64;
    while m > 0 && miss_probability_bound_raw(spec, m - 1) <= spec.delta {
        m -= 1;
    }
    while miss_probability_bound_raw(spec, m) > spec.delta {
        m += 1;
    }
    SampleSize::Finite(m)
}

/// Report for the sample-size calculator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m_min: Option<u64>,
    pub bound_at_m: Option<f64>,
    pub delta: f64,
    pub gap: f64,
    pub n_d: usize,
    pub n_r: usize,
    pub unbounded: bool,
}

pub fn bound_report(spec: &GapSpec) -> BoundReport {
    let m_min = min_observations(spec).finite();
    BoundReport {
        m_min,
        bound_at_m: m_min.map(|m| miss_probability_bound(spec, m)),
        delta: spec.delta,
        gap: spec.gap,
        n_d: spec.n_products,
        n_r: spec.n_ratings,
        unbounded: m_min.is_none(),
    }
}

/// Fraction of `trials` in which greedy, shown `m` sampled ratings per
/// product, does not pick the best product. Ties count by the weight greedy
/// puts on the other products.
pub fn empirical_miss_rate<R: Rng + ?Sized>(
    state: &State,
    m: u32,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::NoObservations);
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if state.n_products() > 1 && top_two_gap(state) <= 0.0 {
        return Err(Error::NonUniqueBest);
    }
    let values = state.values();
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(d, _)| d)
        .expect("non-empty state");
    let mut misses = 0.0;
    for _ in 0..trials {
        let b = sample_observation(state, m, rng);
        misses += 1.0 - greedy_strategy(&b)?.weight(best);
    }
    Ok(misses / trials as f64)
}
