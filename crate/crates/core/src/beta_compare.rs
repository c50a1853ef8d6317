//! `P(X < Y)` for independent Beta random variables.
//!
//! This is the probability that a two-rating Thompson draw prefers the
//! second product. When any one of the four shape parameters is a positive
//! integer a finite sum is exact; otherwise the probability is integrated as
//! `∫₀¹ f_Y(y) I_y(α_X, β_X) dy` with endpoint singularities removed by a
//! change of variables.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, integrate};

/// Absolute tolerance for the quadrature path.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;
const QUADRATURE_MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Parameters of `1 − X`.
    fn mirrored(self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMethod {
    FiniteSum,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaComparison {
    pub prob: f64,
    pub method: ComparisonMethod,
    /// Quadrature error estimate or Monte Carlo standard error; 0 for the
    /// finite sum.
    pub error: f64,
}

fn is_positive_integer(v: f64) -> bool {
    v >= 1.0 && v.fract() == 0.0 && v < 1e9
}

/// `P(B > A)` when `B.alpha` is a positive integer:
/// `Σ_{i<α_B} B(α_A+i, β_A+β_B) / ((β_B+i) B(1+i, β_B) B(α_A, β_A))`.
fn greater_with_integer_alpha(a: BetaParams, b: BetaParams) -> f64 {
    debug_assert!(is_positive_integer(b.alpha));
    let n = b.alpha as u64;
    let ln_norm = ln_beta(a.alpha, a.beta);
    compensated_sum((0..n).map(|i| {
        let i = i as f64;
        (ln_beta(a.alpha + i, a.beta + b.beta)
            - (b.beta + i).ln()
            - ln_beta(1.0 + i, b.beta)
            - ln_norm)
            .exp()
    }))
}

/// Exact `P(X < Y)` if some shape parameter is a positive integer.
pub fn prob_less_finite_sum(x: BetaParams, y: BetaParams) -> Option<f64> {
    let p = if is_positive_integer(y.alpha) {
        greater_with_integer_alpha(x, y)
    } else if is_positive_integer(x.beta) {
        // P(X < Y) = P(1−X > 1−Y)
        greater_with_integer_alpha(y.mirrored(), x.mirrored())
    } else if is_positive_integer(x.alpha) {
        1.0 - greater_with_integer_alpha(y, x)
    } else if is_positive_integer(y.beta) {
        1.0 - greater_with_integer_alpha(x.mirrored(), y.mirrored())
    } else {
        return None;
    };
    Some(p.clamp(0.0, 1.0))
}

/// `P(X < Y)` by adaptive quadrature.
pub fn prob_less_quadrature(x: BetaParams, y: BetaParams, abs_tol: f64) -> Result<BetaComparison> {
    let ln_norm = ln_beta(y.alpha, y.beta);
    let cdf_x = |v: f64| beta_reg(x.alpha, x.beta, v.clamp(0.0, 1.0));

    // [0, 1/2] with t = y^α_Y
    let left_scale = -ln_norm - y.alpha.ln();
    let left = integrate(
        |t: f64| {
            let v = t.powf(1.0 / y.alpha);
            ((y.beta - 1.0) * (-v).ln_1p() + left_scale).exp() * cdf_x(v)
        },
        0.0,
        0.5f64.powf(y.alpha),
        abs_tol / 2.0,
        QUADRATURE_MAX_SEGMENTS,
    )?;

    // [1/2, 1] with t = (1−y)^β_Y; I_y(a, b) = 1 − I_{1−y}(b, a)
    let right_scale = -ln_norm - y.beta.ln();
    let right = integrate(
        |t: f64| {
            let u = t.powf(1.0 / y.beta);
            let density = ((y.alpha - 1.0) * (-u).ln_1p() + right_scale).exp();
            density * (1.0 - beta_reg(x.beta, x.alpha, u.clamp(0.0, 1.0)))
        },
        0.0,
        0.5f64.powf(y.beta),
        abs_tol / 2.0,
        QUADRATURE_MAX_SEGMENTS,
    )?;

    Ok(BetaComparison {
        prob: (left.value + right.value).clamp(0.0, 1.0),
        method: ComparisonMethod::Quadrature,
        error: left.error + right.error,
    })
}

/// Monte Carlo estimate of `P(X < Y)` with its standard error.
pub fn prob_less_monte_carlo<R: Rng + ?Sized>(
    x: BetaParams,
    y: BetaParams,
    samples: usize,
    rng: &mut R,
) -> Result<BetaComparison> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let dx = Beta::new(x.alpha, x.beta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let dy = Beta::new(y.alpha, y.beta).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut hits = 0.0;
    for _ in 0..samples {
        let (a, b) = (dx.sample(rng), dy.sample(rng));
        if a < b {
            hits += 1.0;
        } else if a == b {
            hits += 0.5;
        }
    }
    let n = samples as f64;
    let p = hits / n;
    Ok(BetaComparison {
        prob: p,
        method: ComparisonMethod::MonteCarlo,
        error: (p * (1.0 - p) / n).sqrt(),
    })
}

/// `P(X < Y)`: finite sum when available, otherwise quadrature.
pub fn prob_less(x: BetaParams, y: BetaParams) -> Result<BetaComparison> {
    match prob_less_finite_sum(x, y) {
        Some(prob) => Ok(BetaComparison {
            prob,
            method: ComparisonMethod::FiniteSum,
            error: 0.0,
        }),
        None => prob_less_quadrature(x, y, QUADRATURE_TOLERANCE),
    }
}
