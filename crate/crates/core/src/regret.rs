//! Exact expected payoff and regret by summing over every observation
//! matrix, plus worst-case search over states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelDims, ObservationMatrix, State, StrategyDecision};
use crate::numerics::NeumaierSum;
use crate::optim::{nelder_mead, NelderMeadConfig};
use crate::probability::{
    enumerate_observations_with_cap, observation_likelihood, ObservationSpace,
    DEFAULT_ENUMERATION_CAP,
};
use crate::sampling::stream_rng;
use crate::strategies::{Strategy, TsConfig};

/// Anything that maps an observation matrix to selection probabilities.
pub trait DecisionRule: Sync {
    fn decide(&self, b: &ObservationMatrix) -> Result<StrategyDecision>;
}

impl DecisionRule for Strategy {
    fn decide(&self, b: &ObservationMatrix) -> Result<StrategyDecision> {
        Strategy::decide(self, b)
    }
}

impl<F> DecisionRule for F
where
    F: Fn(&ObservationMatrix) -> Result<StrategyDecision> + Sync,
{
    fn decide(&self, b: &ObservationMatrix) -> Result<StrategyDecision> {
        self(b)
    }
}

/// One observation matrix's share of the expected regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationContribution {
    pub matrix: ObservationMatrix,
    pub likelihood: f64,
    pub decision: StrategyDecision,
    /// `Pr[B|S] · Σ_d σ(B)(d) · (max V_S − V_S(d))`
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub payoff: f64,
    pub regret: f64,
    pub best_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_observation: Option<Vec<ObservationContribution>>,
}

/// A rule's decision for every matrix in `B_m`. Decisions do not depend on
/// the state, so one table serves any number of state evaluations.
#[derive(Debug, Clone)]
pub struct DecisionTable {
    space: ObservationSpace,
    decisions: Vec<StrategyDecision>,
}

impl DecisionTable {
    pub fn build<R: DecisionRule + ?Sized>(rule: &R, dims: ModelDims, cap: u64) -> Result<Self> {
        let space = enumerate_observations_with_cap(dims, cap)?;
        let tuples: Vec<Vec<usize>> = space.index_tuples().collect();
        let decisions = tuples
            .par_iter()
            .map(|idx| {
                let d = rule.decide(&space.matrix_from_indices(idx))?;
                if d.n_products() != dims.n_products {
                    return Err(Error::mismatch(
                        format!("{} decision weights", dims.n_products),
                        d.n_products(),
                    ));
                }
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, decisions })
    }

    pub fn space(&self) -> &ObservationSpace {
        &self.space
    }

    pub fn decisions(&self) -> &[StrategyDecision] {
        &self.decisions
    }

    /// Exact payoff and regret under `state`.
    pub fn evaluate(&self, state: &State) -> Result<RegretReport> {
        self.evaluate_inner(state, false)
    }

    /// Like [`evaluate`](Self::evaluate), keeping every matrix's contribution.
    pub fn evaluate_detailed(&self, state: &State) -> Result<RegretReport> {
        self.evaluate_inner(state, true)
    }

    /// Expected regret only; the hot path of the worst-case search.
    pub fn regret(&self, state: &State) -> Result<f64> {
        let table = self.space.column_likelihood_table(state)?;
        let values = state.values();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let losses: Vec<f64> = values.iter().map(|v| best - v).collect();
        let mut acc = NeumaierSum::new();
        for (idx, decision) in self.space.index_tuples().zip(&self.decisions) {
            let p: f64 = idx.iter().enumerate().map(|(d, &c)| table[d][c]).product();
            if p > 0.0 {
                acc.add(p * decision.expected_value(&losses));
            }
        }
        Ok(acc.total())
    }

    fn evaluate_inner(&self, state: &State, detailed: bool) -> Result<RegretReport> {
        let likelihoods = self.space.likelihoods(state)?;
        let values = state.values();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let losses: Vec<f64> = values.iter().map(|v| best - v).collect();

        let mut payoff = NeumaierSum::new();
        let mut regret = NeumaierSum::new();
        let mut rows = detailed.then(Vec::new);
        for (i, (p, decision)) in likelihoods.iter().zip(&self.decisions).enumerate() {
            let contribution = p * decision.expected_value(&losses);
            payoff.add(p * decision.expected_value(&values));
            regret.add(contribution);
            if let Some(rows) = rows.as_mut() {
                rows.push(ObservationContribution {
                    matrix: self.space.matrix(i),
                    likelihood: *p,
                    decision: decision.clone(),
                    contribution,
                });
            }
        }
        Ok(RegretReport {
            payoff: payoff.total(),
            regret: regret.total(),
            best_value: best,
            per_observation: rows,
        })
    }
}

fn dims_of(state: &State, m: u32) -> Result<ModelDims> {
    ModelDims::new(state.n_products(), state.n_ratings(), m)
}

/// `π(σ, S) = Σ_B Pr[B|S] Σ_d σ(B)(d) V_S(d)`.
pub fn expected_payoff<R: DecisionRule + ?Sized>(rule: &R, state: &State, m: u32) -> Result<f64> {
    Ok(expected_regret(rule, state, m)?.payoff)
}

/// `γ̄(σ, S) = max_d V_S(d) − π(σ, S)`, summed directly over non-negative
/// per-matrix losses.
pub fn expected_regret<R: DecisionRule + ?Sized>(
    rule: &R,
    state: &State,
    m: u32,
) -> Result<RegretReport> {
    expected_regret_with_cap(rule, state, m, DEFAULT_ENUMERATION_CAP)
}

pub fn expected_regret_with_cap<R: DecisionRule + ?Sized>(
    rule: &R,
    state: &State,
    m: u32,
    cap: u64,
) -> Result<RegretReport> {
    DecisionTable::build(rule, dims_of(state, m)?, cap)?.evaluate(state)
}

/// Expected regret with the per-observation breakdown.
pub fn expected_regret_detailed<R: DecisionRule + ?Sized>(
    rule: &R,
    state: &State,
    m: u32,
    cap: u64,
) -> Result<RegretReport> {
    DecisionTable::build(rule, dims_of(state, m)?, cap)?.evaluate_detailed(state)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} is not in [0, 1]"
        )));
    }
    Ok(())
}

/// Greedy regret with one observation per product in the two-product,
/// two-rating state family, where `p_d` is product `d`'s probability of the
/// low rating: `g/2 − g²/2` with `g = |p₁ − p₂|`.
pub fn greedy_regret_closed_form_m1(p1: f64, p2: f64) -> Result<f64> {
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
    Ok(-lo / 2.0 + hi / 2.0 - (lo - hi).powi(2) / 2.0)
}

/// Thompson Sampling regret for two products and two ratings:
/// `Σ_B Pr[B|S'] · P(wrong product) · |p₂ − p₁|`.
pub fn ts_expected_regret(p1: f64, p2: f64, m: u32, cfg: TsConfig) -> Result<RegretReport> {
    ts_expected_regret_with_cap(p1, p2, m, cfg, DEFAULT_ENUMERATION_CAP, false)
}

pub fn ts_expected_regret_with_cap(
    p1: f64,
    p2: f64,
    m: u32,
    cfg: TsConfig,
    cap: u64,
    detailed: bool,
) -> Result<RegretReport> {
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    cfg.validate()?;
    let state = State::two_by_two(p1, p2)?;
    let table = DecisionTable::build(&Strategy::ThompsonSampling(cfg), dims_of(&state, m)?, cap)?;
    if detailed {
        table.evaluate_detailed(&state)
    } else {
        table.evaluate(&state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseConfig {
    pub grid_step: f64,
    /// Absolute regret tolerance of the local refinement.
    pub regret_tol: f64,
    /// Number of best grid cells refined locally.
    pub refine_starts: usize,
    pub cap: u64,
}

impl Default for WorstCaseConfig {
    fn default() -> Self {
        Self {
            grid_step: 1.0 / 200.0,
            regret_tol: 1e-6,
            refine_starts: 4,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMeta {
    pub grid_step: f64,
    pub grid_points: usize,
    pub refine_starts: usize,
    pub refinement_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseResult {
    pub m: u32,
    pub regret: f64,
    pub argmax_state: State,
    pub search: SearchMeta,
}

impl WorstCaseResult {
    /// Low-rating probabilities `(p₁, p₂)` of the maximizing two-by-two state.
    pub fn p_star(&self) -> Option<(f64, f64)> {
        let cols = self.argmax_state.columns();
        (cols.len() == 2 && cols[0].len() == 2).then(|| (cols[0][0], cols[1][0]))
    }
}

/// Worst-case regret over the two-product, two-rating states `S'(p₁, p₂)`.
///
/// A full grid over `[0,1]²` is scanned first; the best cells then seed a
/// Nelder–Mead refinement constrained to the unit square.
pub fn worst_case_regret_2x2(strategy: &Strategy, m: u32) -> Result<WorstCaseResult> {
    worst_case_regret_2x2_with(strategy, m, &WorstCaseConfig::default())
}

pub fn worst_case_regret_2x2_with<R: DecisionRule + ?Sized>(
    rule: &R,
    m: u32,
    cfg: &WorstCaseConfig,
) -> Result<WorstCaseResult> {
    if !(cfg.grid_step > 0.0 && cfg.grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {} must be in (0, 1]",
            cfg.grid_step
        )));
    }
    let table = DecisionTable::build(rule, ModelDims::new(2, 2, m)?, cfg.cap)?;
    let per_axis = (1.0 / cfg.grid_step).round() as usize + 1;
    let coord = |i: usize| i as f64 / (per_axis - 1) as f64;
    let regret_at = |p1: f64, p2: f64| -> Result<f64> { table.regret(&State::two_by_two(p1, p2)?) };

    let cells: Vec<f64> = (0..per_axis * per_axis)
        .into_par_iter()
        .map(|k| regret_at(coord(k / per_axis), coord(k % per_axis)))
        .collect::<Result<_>>()?;

    let mut ranked: Vec<usize> = (0..cells.len()).collect();
    ranked.sort_by(|&a, &b| cells[b].total_cmp(&cells[a]).then(a.cmp(&b)));

    let mut best = (
        cells[ranked[0]],
        coord(ranked[0] / per_axis),
        coord(ranked[0] % per_axis),
    );
    let nm = NelderMeadConfig {
        max_iter: 5000,
        x_tol: 1e-10,
        f_tol: cfg.regret_tol * 1e-3,
        initial_step: cfg.grid_step,
    };
    let mut iterations = 0;
    for &k in ranked.iter().take(cfg.refine_starts) {
        let start = [coord(k / per_axis), coord(k % per_axis)];
        let result = nelder_mead(
            |x| {
                if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return f64::NAN;
                }
                regret_at(x[0], x[1]).map(|r| -r).unwrap_or(f64::NAN)
            },
            &start,
            &nm,
        );
        iterations += result.iterations;
        if -result.value > best.0 {
            best = (-result.value, result.point[0], result.point[1]);
        }
    }

    Ok(WorstCaseResult {
        m,
        regret: best.0,
        argmax_state: State::two_by_two(best.1, best.2)?,
        search: SearchMeta {
            grid_step: cfg.grid_step,
            grid_points: cells.len(),
            refine_starts: cfg.refine_starts,
            refinement_iterations: iterations,
        },
    })
}

/// One row of a worst-case regret curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: u32,
    pub regret: f64,
    pub p1_star: f64,
    pub p2_star: f64,
}

/// Worst-case regret of `strategy` for every `m` in `1..=m_max`.
pub fn regret_curve(
    strategy: &Strategy,
    m_max: u32,
    cfg: &WorstCaseConfig,
) -> Result<Vec<CurvePoint>> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    (1..=m_max)
        .map(|m| {
            let w = worst_case_regret_2x2_with(strategy, m, cfg)?;
            let (p1_star, p2_star) = w.p_star().expect("two-by-two state");
            Ok(CurvePoint {
                m,
                regret: w.regret,
                p1_star,
                p2_star,
            })
        })
        .collect()
}

/// Worst-case search over arbitrary dimensions: multi-start Nelder–Mead on
/// per-column softmax parameters. A local search with no optimality
/// guarantee.
pub fn worst_case_regret_search<R: DecisionRule + ?Sized>(
    rule: &R,
    dims: ModelDims,
    starts: usize,
    seed: u64,
    cap: u64,
) -> Result<WorstCaseResult> {
    use rand::Rng;

    let table = DecisionTable::build(rule, dims, cap)?;
    let (nd, nr) = (dims.n_products, dims.n_ratings);
    let to_state = |x: &[f64]| -> Result<State> {
        let columns = x
            .chunks(nr)
            .map(|logits| {
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        State::from_columns(columns)
    };
    let nm = NelderMeadConfig {
        max_iter: 4000,
        x_tol: 1e-8,
        f_tol: 1e-12,
        initial_step: 1.0,
    };
    let mut rng = stream_rng(&[seed]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    for _ in 0..starts.max(1) {
        let start: Vec<f64> = (0..nd * nr).map(|_| rng.random_range(-3.0..3.0)).collect();
        let result = nelder_mead(
            |x| {
                to_state(x)
                    .and_then(|s| table.regret(&s))
                    .map(|r| -r)
                    .unwrap_or(f64::NAN)
            },
            &start,
            &nm,
        );
        iterations += result.iterations;
        if best.as_ref().is_none_or(|(v, _)| -result.value > *v) {
            best = Some((-result.value, result.point));
        }
    }
    let (regret, point) = best.expect("at least one start");
    Ok(WorstCaseResult {
        m: dims.m,
        regret,
        argmax_state: to_state(&point)?,
        search: SearchMeta {
            grid_step: 0.0,
            grid_points: 0,
            refine_starts: starts.max(1),
            refinement_iterations: iterations,
        },
    })
}

/// Outcome of the one-observation lower-bound verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub grid_points: usize,
    /// Smallest `max(γ̄(σ_p, S₁), γ̄(σ_p, S₂))` over the grid.
    pub min_worst_regret: f64,
    pub argmin_p: f64,
    /// Every grid point has worst regret ≥ 1/8 − 1e-12.
    pub bound_holds: bool,
    /// 1/8 is attained (within 1e-12) only at `p = 1/2`.
    pub equality_only_at_half: bool,
    /// Largest deviation of the engine's regrets from `p/4` and `(1−p)/4`.
    pub max_formula_deviation: f64,
}

/// Checks that no rule beats worst-case regret 1/8 with one observation.
///
/// For each `p` on a grid of `[0, 1]`, the rule plays `(p, 1−p)` on the
/// all-high-rating matrix and greedily elsewhere. Its exact regret under
/// `S₁ = [[.5, 0], [.5, 1]]` and `S₂ = [[0, .5], [1, .5]]` must be `p/4` and
/// `(1−p)/4`, so the worse of the two is never below 1/8.
pub fn lower_bound_check_m1(step: f64) -> Result<LowerBoundCheck> {
    const EIGHTH: f64 = 0.125;
    const TOL: f64 = 1e-12;
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "step {step} must be in (0, 1]"
        )));
    }
    let s1 = State::from_rows(&[vec![0.5, 0.0], vec![0.5, 1.0]])?;
    let s2 = State::from_rows(&[vec![0.0, 0.5], vec![1.0, 0.5]])?;
    let both_high = ObservationMatrix::from_rows(&[vec![0, 0], vec![1, 1]])?;
    debug_assert_eq!(observation_likelihood(&both_high, &s1)?, 0.5);

    let n = (1.0 / step).round() as usize;
    let mut check = LowerBoundCheck {
        grid_points: n + 1,
        min_worst_regret: f64::INFINITY,
        argmin_p: f64::NAN,
        bound_holds: true,
        equality_only_at_half: true,
        max_formula_deviation: 0.0,
    };
    for i in 0..=n {
        let p = i as f64 / n as f64;
        let rule = |b: &ObservationMatrix| {
            if *b == both_high {
                StrategyDecision::new(vec![p, 1.0 - p])
            } else {
                crate::strategies::greedy_strategy(b)
            }
        };
        let r1 = expected_regret(&rule, &s1, 1)?.regret;
        let r2 = expected_regret(&rule, &s2, 1)?.regret;
        check.max_formula_deviation = check
            .max_formula_deviation
            .max((r1 - p / 4.0).abs())
            .max((r2 - (1.0 - p) / 4.0).abs());
        let worst = r1.max(r2);
        if worst < check.min_worst_regret {
            check.min_worst_regret = worst;
            check.argmin_p = p;
        }
        if worst < EIGHTH - TOL {
            check.bound_holds = false;
        }
        if (worst - EIGHTH).abs() <= TOL && p != 0.5 {
            check.equality_only_at_half = false;
        }
    }
    Ok(check)
}
