//! Decision rules mapping an observation matrix to a distribution over
//! products: uniform, greedy, UCB and Thompson Sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beta_compare::{self, BetaParams, ComparisonMethod};
use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, StrategyDecision};
use crate::sampling::{sample_dirichlet, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Uniform,
    Greedy,
    Ucb,
    #[serde(rename = "ts")]
    ThompsonSampling,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Uniform,
        StrategyKind::Greedy,
        StrategyKind::Ucb,
        StrategyKind::ThompsonSampling,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::Uniform => "uniform",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Ucb => "ucb",
            StrategyKind::ThompsonSampling => "ts",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(StrategyKind::Uniform),
            "greedy" => Ok(StrategyKind::Greedy),
            "ucb" => Ok(StrategyKind::Ucb),
            "ts" | "thompson" | "thompson-sampling" | "thompson_sampling" => {
                Ok(StrategyKind::ThompsonSampling)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

/// Thompson Sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsConfig {
    /// Stand-in for zero rating counts so the posterior is proper.
    pub pseudo_count: f64,
    /// Draws for Monte Carlo selection probabilities.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for TsConfig {
    fn default() -> Self {
        Self {
            pseudo_count: 1e-3,
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

impl TsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pseudo_count.is_finite() && self.pseudo_count > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pseudo_count must be positive, got {}",
                self.pseudo_count
            )));
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidParameter(
                "mc_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A decision rule, with whatever configuration it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Uniform,
    Greedy,
    Ucb,
    #[serde(rename = "ts")]
    ThompsonSampling(TsConfig),
}

impl Strategy {
    pub fn from_kind(kind: StrategyKind, ts: TsConfig) -> Self {
        match kind {
            StrategyKind::Uniform => Strategy::Uniform,
            StrategyKind::Greedy => Strategy::Greedy,
            StrategyKind::Ucb => Strategy::Ucb,
            StrategyKind::ThompsonSampling => Strategy::ThompsonSampling(ts),
        }
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Uniform => StrategyKind::Uniform,
            Strategy::Greedy => StrategyKind::Greedy,
            Strategy::Ucb => StrategyKind::Ucb,
            Strategy::ThompsonSampling(_) => StrategyKind::ThompsonSampling,
        }
    }

    /// Selection probabilities for `b`. Thompson Sampling reports its
    /// exact (two products, two ratings) or Monte Carlo probabilities.
    pub fn decide(&self, b: &ObservationMatrix) -> Result<StrategyDecision> {
        match self {
            Strategy::Uniform => Ok(uniform_strategy(b)),
            Strategy::Greedy => greedy_strategy(b),
            Strategy::Ucb => ucb_strategy(b),
            Strategy::ThompsonSampling(cfg) => Ok(ts_selection_probability(b, cfg)?.decision),
        }
    }

    /// One product picked the way the rule would play it: Thompson Sampling
    /// draws from its posterior, the others sample their decision.
    pub fn choose<R: Rng + ?Sized>(&self, b: &ObservationMatrix, rng: &mut R) -> Result<usize> {
        match self {
            Strategy::ThompsonSampling(cfg) => ts_sample(b, cfg, rng),
            _ => Ok(sample_decision(&self.decide(b)?, rng)),
        }
    }
}

fn sample_decision<R: Rng + ?Sized>(decision: &StrategyDecision, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (d, &w) in decision.weights().iter().enumerate() {
        if w > 0.0 {
            last_positive = d;
        }
        acc += w;
        if u < acc && w > 0.0 {
            return d;
        }
    }
    last_positive
}

/// Indices attaining the maximum of `keys` (exact comparison).
fn argmax_set<T: PartialOrd + Copy>(keys: &[T]) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for (d, &k) in keys.iter().enumerate() {
        match best.first() {
            None => best.push(d),
            Some(&b) if k > keys[b] => {
                best.clear();
                best.push(d);
            }
            Some(&b) if k == keys[b] => best.push(d),
            _ => {}
        }
    }
    best
}

pub fn uniform_strategy(b: &ObservationMatrix) -> StrategyDecision {
    StrategyDecision::uniform(b.n_products())
}

/// Uniform over the products with the highest observed mean rating.
///
/// Means share the denominator `m`, so the comparison runs on integer rating
/// totals and ties are exact.
pub fn greedy_strategy(b: &ObservationMatrix) -> Result<StrategyDecision> {
    if b.m() == 0 {
        return Err(Error::NoObservations);
    }
    let numerators = (0..b.n_products())
        .map(|d| b.value_numerator(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(StrategyDecision::uniform_over(
        &argmax_set(&numerators),
        b.n_products(),
    ))
}

/// Exploration bonus `sqrt(2 ln(n_d² m) / m)` for a product seen `m` times.
pub fn ucb_bonus(n_products: usize, m: u32) -> f64 {
    let m = f64::from(m);
    let n = n_products as f64;
    (2.0 * (n * n * m).ln() / m).sqrt()
}

/// Uniform over the argmax of observed mean plus exploration bonus.
///
/// Each product's bonus uses its own observation count; with a shared `m`
/// every bonus is identical and the rule coincides with greedy.
pub fn ucb_strategy(b: &ObservationMatrix) -> Result<StrategyDecision> {
    if b.m() == 0 {
        return Err(Error::NoObservations);
    }
    let n = b.n_products();
    let index = (0..n)
        .map(|d| {
            let col = b.column(d)?;
            let count: u32 = col.iter().sum();
            let mean = b.value_numerator(d)? as f64 / f64::from(count);
            Ok(mean + ucb_bonus(n, count))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StrategyDecision::uniform_over(&argmax_set(&index), n))
}

/// Dirichlet concentrations per product: counts, with zeros replaced by the
/// pseudo-count.
pub fn ts_posterior(b: &ObservationMatrix, pseudo_count: f64) -> Vec<Vec<f64>> {
    b.columns()
        .iter()
        .map(|col| {
            col.iter()
                .map(|&c| if c == 0 { pseudo_count } else { f64::from(c) })
                .collect()
        })
        .collect()
}

fn sampled_values<R: Rng + ?Sized>(posterior: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
    posterior
        .iter()
        .map(|alphas| {
            let y = sample_dirichlet(alphas, rng)?;
            Ok(y.iter().enumerate().map(|(r, p)| (r + 1) as f64 * p).sum())
        })
        .collect()
}

/// One Thompson Sampling selection: draw each product's rating
/// distribution from its Dirichlet posterior and pick the highest expected
/// rating, breaking ties uniformly.
pub fn ts_sample<R: Rng + ?Sized>(
    b: &ObservationMatrix,
    cfg: &TsConfig,
    rng: &mut R,
) -> Result<usize> {
    cfg.validate()?;
    let values = sampled_values(&ts_posterior(b, cfg.pseudo_count), rng)?;
    let best = argmax_set(&values);
    Ok(if best.len() == 1 {
        best[0]
    } else {
        best[rng.random_range(0..best.len())]
    })
}

/// Thompson Sampling selection probabilities with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsSelection {
    pub decision: StrategyDecision,
    pub method: ComparisonMethod,
    /// Quadrature error or Monte Carlo standard error (largest over
    /// products); 0 for the finite sum.
    pub error: f64,
}

/// Probability that Thompson Sampling selects each product given `b`.
///
/// Two products with two ratings are exact: product 1's sampled value is
/// `1 + X`, `X ~ Beta(b₂₁, b₁₁)`, and likewise `1 + Y` for product 2, so
/// product 2 is chosen with probability `P(X < Y)`. Other shapes use
/// `cfg.mc_samples` posterior draws from a stream seeded by `cfg.seed`.
pub fn ts_selection_probability(b: &ObservationMatrix, cfg: &TsConfig) -> Result<TsSelection> {
    cfg.validate()?;
    let n = b.n_products();
    if n == 1 {
        return Ok(TsSelection {
            decision: StrategyDecision::point(0, 1),
            method: ComparisonMethod::FiniteSum,
            error: 0.0,
        });
    }
    let posterior = ts_posterior(b, cfg.pseudo_count);
    if n == 2 && b.n_ratings() == 2 {
        let x = BetaParams::new(posterior[0][1], posterior[0][0])?;
        let y = BetaParams::new(posterior[1][1], posterior[1][0])?;
        let cmp = match beta_compare::prob_less(x, y) {
            Ok(c) => c,
            Err(Error::QuadratureNonConvergence { .. }) => {
                let mut rng = stream_rng(&[cfg.seed]);
                beta_compare::prob_less_monte_carlo(x, y, cfg.mc_samples, &mut rng)?
            }
            Err(e) => return Err(e),
        };
        return Ok(TsSelection {
            decision: StrategyDecision::new(vec![1.0 - cmp.prob, cmp.prob])?,
            method: cmp.method,
            error: cmp.error,
        });
    }

    let mut rng = stream_rng(&[cfg.seed]);
    let mut wins = vec![0.0; n];
    for _ in 0..cfg.mc_samples {
        let values = sampled_values(&posterior, &mut rng)?;
        let best = argmax_set(&values);
        let share = 1.0 / best.len() as f64;
        for d in best {
            wins[d] += share;
        }
    }
    let total = cfg.mc_samples as f64;
    let weights: Vec<f64> = wins.iter().map(|w| w / total).collect();
    let error = weights
        .iter()
        .map(|p| (p * (1.0 - p) / total).sqrt())
        .fold(0.0, f64::max);
    Ok(TsSelection {
        decision: StrategyDecision::new(weights)?,
        method: ComparisonMethod::MonteCarlo,
        error,
    })
}
