//! Domain types: states, observation matrices and strategy decisions.
//!
//! Matrices are stored column-major (one column per product), matching how
//! every computation in the crate walks them. Rating `r` sits at row
//! `r - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column sums may deviate from 1 by at most this much after construction.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-12;
/// Columns off by at most this much are renormalized; larger deviations are
/// rejected.
pub const NORMALIZE_TOLERANCE: f64 = 1e-9;

/// Sizes of a game: products, rating levels and observations per product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub n_products: usize,
    pub n_ratings: usize,
    pub m: u32,
}

impl ModelDims {
    pub fn new(n_products: usize, n_ratings: usize, m: u32) -> Result<Self> {
        if n_products == 0 {
            return Err(Error::InvalidDims("need at least one product".into()));
        }
        if n_ratings < 2 {
            return Err(Error::InvalidDims(format!(
                "need at least two ratings, got {n_ratings}"
            )));
        }
        Ok(Self {
            n_products,
            n_ratings,
            m,
        })
    }
}

/// Nature's choice: a column-stochastic `n_r × n_d` matrix where entry
/// `(r, d)` is the probability product `d` receives rating `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct State {
    columns: Vec<Vec<f64>>,
}

/// Wire form of a [`State`]: either `{"columns": [[..], ..]}` or a bare
/// array of columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRepr {
    Columns { columns: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

impl TryFrom<StateRepr> for State {
    type Error = Error;

    fn try_from(repr: StateRepr) -> Result<Self> {
        match repr {
            StateRepr::Columns { columns } | StateRepr::Bare(columns) => {
                State::from_columns(columns)
            }
        }
    }
}

impl From<State> for StateRepr {
    fn from(state: State) -> Self {
        StateRepr::Columns {
            columns: state.columns,
        }
    }
}

impl State {
    /// Builds a state from per-product rating distributions.
    pub fn from_columns(mut columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_ratings = columns.first().map(Vec::len).unwrap_or(0);
        if columns.is_empty() {
            return Err(Error::InvalidState("no products".into()));
        }
        if n_ratings < 2 {
            return Err(Error::InvalidState(format!(
                "need at least two ratings, got {n_ratings}"
            )));
        }
        for (d, col) in columns.iter_mut().enumerate() {
            if col.len() != n_ratings {
                return Err(Error::InvalidState(format!(
                    "column {} has {} entries, expected {n_ratings}",
                    d + 1,
                    col.len()
                )));
            }
            if let Some(bad) = col
                .iter()
                .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
            {
                return Err(Error::InvalidState(format!(
                    "column {} has entry {bad} outside [0, 1]",
                    d + 1
                )));
            }
            let sum: f64 = col.iter().sum();
            let deviation = (sum - 1.0).abs();
            if deviation > NORMALIZE_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "column {} sums to {sum}, not 1",
                    d + 1
                )));
            }
            if deviation > COLUMN_SUM_TOLERANCE {
                col.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(Self { columns })
    }

    /// Builds a state from rows indexed by rating, as matrices are usually
    /// written down.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_columns(transpose(rows)?)
    }

    /// Two products, two ratings: product `d` gets rating 1 with
    /// probability `p_d` and rating 2 otherwise.
    pub fn two_by_two(p1: f64, p2: f64) -> Result<Self> {
        Self::from_columns(vec![vec![p1, 1.0 - p1], vec![p2, 1.0 - p2]])
    }

    pub fn n_products(&self) -> usize {
        self.columns.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.columns[0].len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, d: usize) -> Result<&[f64]> {
        self.columns
            .get(d)
            .map(Vec::as_slice)
            .ok_or(Error::ProductOutOfRange {
                index: d,
                n_products: self.n_products(),
            })
    }

    /// Expected rating of product `d` (0-based): `Σ_r r · s[r][d]`.
    pub fn value(&self, d: usize) -> Result<f64> {
        Ok(column_value(self.column(d)?))
    }

    pub fn values(&self) -> Vec<f64> {
        self.columns.iter().map(|c| column_value(c)).collect()
    }

    pub fn best_value(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn column_value(col: &[f64]) -> f64 {
    col.iter()
        .enumerate()
        .map(|(r, p)| (r + 1) as f64 * p)
        .sum()
}

fn transpose<T: Copy>(rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidDims("ragged matrix rows".into()));
    }
    Ok((0..width)
        .map(|d| rows.iter().map(|r| r[d]).collect())
        .collect())
}

/// Rating counts per product; every column sums to the same `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationMatrix {
    columns: Vec<Vec<u32>>,
    m: u32,
}

impl ObservationMatrix {
    pub fn from_columns(columns: Vec<Vec<u32>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::InvalidObservation("no products".into()));
        };
        let n_ratings = first.len();
        if n_ratings < 2 {
            return Err(Error::InvalidObservation(format!(
                "need at least two ratings, got {n_ratings}"
            )));
        }
        let m: u64 = first.iter().map(|&c| u64::from(c)).sum();
        for (d, col) in columns.iter().enumerate() {
            if col.len() != n_ratings {
                return Err(Error::InvalidObservation(format!(
                    "column {} has {} entries, expected {n_ratings}",
                    d + 1,
                    col.len()
                )));
            }
            let sum: u64 = col.iter().map(|&c| u64::from(c)).sum();
            if sum != m {
                return Err(Error::InvalidObservation(format!(
                    "column {} sums to {sum}, column 1 sums to {m}",
                    d + 1
                )));
            }
        }
        let m = u32::try_from(m)
            .map_err(|_| Error::InvalidObservation(format!("{m} observations per product")))?;
        Ok(Self { columns, m })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        Self::from_columns(transpose(rows)?)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n_products(&self) -> usize {
        self.columns.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.columns[0].len()
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            n_products: self.n_products(),
            n_ratings: self.n_ratings(),
            m: self.m,
        }
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn column(&self, d: usize) -> Result<&[u32]> {
        self.columns
            .get(d)
            .map(Vec::as_slice)
            .ok_or(Error::ProductOutOfRange {
                index: d,
                n_products: self.n_products(),
            })
    }

    /// Integer rating total `Σ_r r · b[r][d]`. With a shared `m` this orders
    /// products exactly like the observed mean.
    pub fn value_numerator(&self, d: usize) -> Result<u64> {
        Ok(self
            .column(d)?
            .iter()
            .enumerate()
            .map(|(r, &c)| (r as u64 + 1) * u64::from(c))
            .sum())
    }

    /// Sample-mean rating of product `d`.
    pub fn observed_value(&self, d: usize) -> Result<f64> {
        let numerator = self.value_numerator(d)?;
        if self.m == 0 {
            return Err(Error::NoObservations);
        }
        Ok(numerator as f64 / f64::from(self.m))
    }

    pub(crate) fn check_matches(&self, state: &State) -> Result<()> {
        if self.n_products() != state.n_products() || self.n_ratings() != state.n_ratings() {
            return Err(Error::mismatch(
                format!("{}x{} state", state.n_ratings(), state.n_products()),
                format!(
                    "{}x{} observation matrix",
                    self.n_ratings(),
                    self.n_products()
                ),
            ));
        }
        Ok(())
    }
}

/// A probability distribution over products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDecision {
    weights: Vec<f64>,
}

impl StrategyDecision {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty decision".into()));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "decision weights outside [0, 1]: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "decision weights sum to {sum}"
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform weight over `support`, zero elsewhere.
    pub fn uniform_over(support: &[usize], n_products: usize) -> Self {
        debug_assert!(!support.is_empty());
        let mut weights = vec![0.0; n_products];
        let w = 1.0 / support.len() as f64;
        for &d in support {
            weights[d] = w;
        }
        Self { weights }
    }

    pub fn uniform(n_products: usize) -> Self {
        Self {
            weights: vec![1.0 / n_products as f64; n_products],
        }
    }

    pub fn point(d: usize, n_products: usize) -> Self {
        Self::uniform_over(&[d], n_products)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, d: usize) -> f64 {
        self.weights[d]
    }

    pub fn n_products(&self) -> usize {
        self.weights.len()
    }

    /// `Σ_d w_d · values[d]`.
    pub fn expected_value(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
