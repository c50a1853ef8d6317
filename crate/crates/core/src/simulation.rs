//! Monte Carlo experiments over review datasets.
//!
//! Each product's ground-truth value is the mean of all its ratings. A
//! trial draws `n_d` products, shows each strategy `m` of their ratings
//! sampled without replacement, and scores the pick against the best
//! ground-truth value among the drawn products.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use indexmap::IndexMap;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, State};
use crate::numerics::compensated_sum;
use crate::sampling::{key_hash, sample_counts, stream_rng, stream_seed};
use crate::strategies::{Strategy, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub id: String,
    pub ratings: Vec<u32>,
}

/// Ratings per product on a `1..=n_r` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ReviewDataset {
    n_ratings: usize,
    products: Vec<Product>,
    means: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub products: usize,
    pub reviews: usize,
    pub mean_rating: f64,
    pub std_rating: f64,
}

impl ReviewDataset {
    pub fn new(n_ratings: usize, products: Vec<Product>) -> Result<Self> {
        if n_ratings < 2 {
            return Err(Error::InvalidDims(format!(
                "need at least two ratings, got {n_ratings}"
            )));
        }
        for p in &products {
            if p.ratings.is_empty() {
                return Err(Error::data(
                    None,
                    format!("product `{}` has no ratings", p.id),
                ));
            }
            if let Some(r) = p
                .ratings
                .iter()
                .find(|&&r| r == 0 || r as usize > n_ratings)
            {
                return Err(Error::data(
                    None,
                    format!("product `{}` has rating {r} outside 1..={n_ratings}", p.id),
                ));
            }
        }
        let means = products
            .iter()
            .map(|p| {
                compensated_sum(p.ratings.iter().map(|&r| f64::from(r))) / p.ratings.len() as f64
            })
            .collect();
        Ok(Self {
            n_ratings,
            products,
            means,
        })
    }

    pub fn n_ratings(&self) -> usize {
        self.n_ratings
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// Ground-truth value of each product, aligned with [`products`](Self::products).
    pub fn values(&self) -> &[f64] {
        &self.means
    }

    pub fn summary(&self) -> DatasetSummary {
        let all = || {
            self.products
                .iter()
                .flat_map(|p| p.ratings.iter().map(|&r| f64::from(r)))
        };
        let reviews = self.products.iter().map(|p| p.ratings.len()).sum::<usize>();
        let mean = compensated_sum(all()) / reviews.max(1) as f64;
        let var = compensated_sum(all().map(|r| (r - mean).powi(2))) / reviews.max(1) as f64;
        DatasetSummary {
            products: self.products.len(),
            reviews,
            mean_rating: mean,
            std_rating: var.sqrt(),
        }
    }
}

/// Reads `product_id,rating` rows (header optional, gzip detected by magic
/// bytes). Any malformed row aborts the load with its line number.
pub fn load_reviews(path: impl AsRef<Path>, n_ratings: usize) -> Result<ReviewDataset> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::data(None, format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let gz = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        parse_reviews(MultiGzDecoder::new(reader), n_ratings)
    } else {
        parse_reviews(reader, n_ratings)
    }
}

pub fn parse_reviews<R: Read>(reader: R, n_ratings: usize) -> Result<ReviewDataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut products: IndexMap<String, Vec<u32>> = IndexMap::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::data(line, format!("unreadable row: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::data(
                line,
                format!(
                    "expected `product_id,rating`, found {} fields",
                    record.len()
                ),
            ));
        }
        let (id, raw) = (&record[0], &record[1]);
        let rating = match raw.parse::<u32>() {
            Ok(r) => r,
            Err(_) if i == 0 => continue, // header row
            Err(_) => {
                return Err(Error::data(
                    line,
                    format!("rating `{raw}` is not an integer"),
                ));
            }
        };
        if rating == 0 || rating as usize > n_ratings {
            return Err(Error::data(
                line,
                format!("rating {rating} outside 1..={n_ratings}"),
            ));
        }
        if id.is_empty() {
            return Err(Error::data(line, "empty product id"));
        }
        products.entry(id.to_string()).or_default().push(rating);
    }
    ReviewDataset::new(
        n_ratings,
        products
            .into_iter()
            .map(|(id, ratings)| Product { id, ratings })
            .collect(),
    )
}

/// Mean rating of every product, keyed by id.
pub fn ground_truth_values(ds: &ReviewDataset) -> IndexMap<String, f64> {
    ds.products
        .iter()
        .zip(&ds.means)
        .map(|(p, &v)| (p.id.clone(), v))
        .collect()
}

/// A dataset whose product `d` has `reviews_per_product` i.i.d. ratings from
/// column `d` of `state`. Product ids are `p1, p2, …`.
pub fn synthesize_dataset<R: Rng + ?Sized>(
    state: &State,
    reviews_per_product: usize,
    rng: &mut R,
) -> Result<ReviewDataset> {
    if reviews_per_product == 0 {
        return Err(Error::InvalidParameter(
            "need at least one review per product".into(),
        ));
    }
    let products = state
        .columns()
        .iter()
        .enumerate()
        .map(|(d, probs)| {
            let mut ratings = Vec::with_capacity(reviews_per_product);
            for _ in 0..reviews_per_product {
                let counts = sample_counts(probs, 1, rng);
                let r = counts.iter().position(|&c| c == 1).expect("one draw") as u32 + 1;
                ratings.push(r);
            }
            Product {
                id: format!("p{}", d + 1),
                ratings,
            }
        })
        .collect();
    ReviewDataset::new(state.n_ratings(), products)
}

/// Like [`synthesize_dataset`], checking the state against a requested
/// rating scale.
pub fn synthesize_dataset_on_scale<R: Rng + ?Sized>(
    state: &State,
    n_ratings: usize,
    reviews_per_product: usize,
    rng: &mut R,
) -> Result<ReviewDataset> {
    if state.n_ratings() != n_ratings {
        return Err(Error::mismatch(
            format!("{n_ratings} ratings"),
            format!("state with {} ratings", state.n_ratings()),
        ));
    }
    synthesize_dataset(state, reviews_per_product, rng)
}

fn eligible_products(ds: &ReviewDataset, m: usize) -> Vec<usize> {
    (0..ds.products.len())
        .filter(|&i| ds.products[i].ratings.len() >= m)
        .collect()
}

fn trial_on_pool<R: Rng + ?Sized>(
    ds: &ReviewDataset,
    pool: &[usize],
    n_d: usize,
    m: usize,
    strategy: &Strategy,
    rng: &mut R,
) -> Result<f64> {
    if pool.len() < n_d {
        return Err(Error::InsufficientProducts {
            available: pool.len(),
            requested: n_d,
            m,
        });
    }
    let picked: Vec<usize> = index::sample(rng, pool.len(), n_d)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    let columns = picked
        .iter()
        .map(|&p| {
            let ratings = &ds.products[p].ratings;
            let mut counts = vec![0u32; ds.n_ratings];
            for i in index::sample(rng, ratings.len(), m) {
                counts[ratings[i] as usize - 1] += 1;
            }
            counts
        })
        .collect();
    let b = ObservationMatrix::from_columns(columns)?;
    let truth: Vec<f64> = picked.iter().map(|&p| ds.means[p]).collect();
    let best = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let payoff = match strategy {
        Strategy::ThompsonSampling(_) => truth[strategy.choose(&b, rng)?],
        _ => strategy.decide(&b)?.expected_value(&truth),
    };
    Ok((best - payoff).max(0.0))
}

/// One trial: draw `n_d` products among those with at least `m` ratings,
/// sample `m` ratings from each without replacement, apply `strategy`, and
/// return the best drawn ground-truth value minus the strategy's payoff.
/// Thompson Sampling plays one sampled selection; other rules are scored by
/// their decision weights.
pub fn run_trial<R: Rng + ?Sized>(
    ds: &ReviewDataset,
    n_d: usize,
    m: usize,
    strategy: &Strategy,
    rng: &mut R,
) -> Result<f64> {
    if n_d == 0 {
        return Err(Error::InvalidParameter("n_d must be at least 1".into()));
    }
    trial_on_pool(ds, &eligible_products(ds, m), n_d, m, strategy, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub n_d_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_d_values.is_empty() || self.m_values.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one n_d, m and strategy".into(),
            ));
        }
        if self.n_d_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "n_d values must be at least 1".into(),
            ));
        }
        if self.m_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "m values must be at least 1".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCell {
    pub strategy: StrategyKind,
    pub n_d: usize,
    pub m: usize,
    pub mean_regret: f64,
    pub std_error: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_regrets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTable {
    pub grid: ExperimentGrid,
    pub cells: Vec<RegretCell>,
}

impl RegretTable {
    pub fn cell(&self, strategy: StrategyKind, n_d: usize, m: usize) -> Option<&RegretCell> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.n_d == n_d && c.m == m)
    }

    pub fn mean(&self, strategy: StrategyKind, n_d: usize, m: usize) -> Option<f64> {
        self.cell(strategy, n_d, m).map(|c| c.mean_regret)
    }

    /// Mean regrets for one strategy with rows `m` and columns `n_d`.
    pub fn to_csv(&self, strategy: StrategyKind) -> String {
        let mut out = String::from("m/n_d");
        for n_d in &self.grid.n_d_values {
            out.push_str(&format!(",{n_d}"));
        }
        out.push('\n');
        for &m in &self.grid.m_values {
            out.push_str(&m.to_string());
            for &n_d in &self.grid.n_d_values {
                match self.mean(strategy, n_d, m) {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Per-trial records as JSON lines; empty unless trials were kept.
    pub fn trial_log(&self) -> String {
        let mut out = String::new();
        for cell in &self.cells {
            for (t, r) in cell.trial_regrets.iter().flatten().enumerate() {
                let row = serde_json::json!({
                    "strategy": cell.strategy,
                    "n_d": cell.n_d,
                    "m": cell.m,
                    "trial": t,
                    "regret": r,
                });
                out.push_str(&row.to_string());
                out.push('\n');
            }
        }
        out
    }
}

/// Per-trial random stream: a stable hash of the seed, strategy, `n_d`,
/// `m` and trial index.
pub fn trial_seed(seed: u64, strategy: StrategyKind, n_d: usize, m: usize, trial: usize) -> u64 {
    stream_seed(&[
        seed,
        key_hash(strategy.id()),
        n_d as u64,
        m as u64,
        trial as u64,
    ])
}

/// Runs every `(strategy, n_d, m)` cell of `grid`. Trials run in parallel
/// and are reduced in trial order, so equal grids give identical tables.
pub fn run_experiment(ds: &ReviewDataset, grid: &ExperimentGrid) -> Result<RegretTable> {
    run_experiment_with(ds, grid, false)
}

pub fn run_experiment_with(
    ds: &ReviewDataset,
    grid: &ExperimentGrid,
    keep_trials: bool,
) -> Result<RegretTable> {
    grid.validate()?;
    let mut cells = Vec::new();
    for strategy in &grid.strategies {
        for &n_d in &grid.n_d_values {
            for &m in &grid.m_values {
                let pool = eligible_products(ds, m);
                let regrets = (0..grid.trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng =
                            stream_rng(&[trial_seed(grid.seed, strategy.kind(), n_d, m, t)]);
                        trial_on_pool(ds, &pool, n_d, m, strategy, &mut rng)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let n = regrets.len() as f64;
                let mean = compensated_sum(regrets.iter().copied()) / n;
                let var = if regrets.len() > 1 {
                    compensated_sum(regrets.iter().map(|r| (r - mean).powi(2))) / (n - 1.0)
                } else {
                    0.0
                };
                cells.push(RegretCell {
                    strategy: strategy.kind(),
                    n_d,
                    m,
                    mean_regret: mean,
                    std_error: (var / n).sqrt(),
                    trials: regrets.len(),
                    trial_regrets: keep_trials.then_some(regrets),
                });
            }
        }
    }
    Ok(RegretTable {
        grid: grid.clone(),
        cells,
    })
}
