//! Market-consistent aggregates for a given vacancy level, and the
//! grid-search oracle for the profit a single firm can extract when its own
//! posting moves the market.

use serde::{Deserialize, Serialize};

use crate::econ::{self, ModelParams};
use crate::error::{Error, Result};

const CONSISTENCY_TOL: f64 = 1e-12;
const MAX_ITER: usize = 5_000;

/// Employment implied by vacancies `v` at tightness `theta`, with the fill
/// probability clamp and an upper guard so `theta = v/(1-l)` stays defined.
fn implied_employment(theta: f64, v: f64, p: &ModelParams) -> f64 {
    let q = (p.match_efficiency * theta.powf(-p.phi)).clamp(0.0, 1.0);
    (q * v / p.lambda).min(1.0 - 1e-9)
}

/// Solves the two-equation fixed point `l = q(theta) v / lambda`,
/// `theta = v / (1 - l)` by damped iteration on employment. The step is
/// halved until the residual shrinks by a sufficient margin; plain
/// any-decrease acceptance zigzags here because the raw map is steep and
/// nearly involutive around the root.
///
/// Returns the consistent `(l, u, theta)` triple.
pub fn consistent_state_for_v(v: f64, p: &ModelParams) -> Result<(f64, f64, f64)> {
    if v <= 0.0 {
        return Err(Error::domain(format!("vacancies must be strictly positive, got {v}")));
    }
    p.validate()?;

    let map = |l: f64| implied_employment(v / (1.0 - l), v, p);

    let mut l = 0.5f64;
    let mut res = map(l) - l;
    let mut trace = Vec::new();
    for _ in 0..MAX_ITER {
        if res.abs() < CONSISTENCY_TOL {
            let theta = v / (1.0 - l);
            return Ok((l, 1.0 - l, theta));
        }
        trace.push(l);
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = (l + step * res).clamp(0.0, 1.0 - 1e-9);
            let trial_res = map(trial) - trial;
            if trial_res.abs() <= (1.0 - 0.25 * step) * res.abs() {
                l = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual_norm: res.abs(),
        last_iterate: trace,
    })
}

/// Profit-maximizing solution for a firm whose posting moves the market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonopsonySolution {
    pub v: f64,
    pub l: f64,
    pub theta: f64,
    pub steady_profit: f64,
}

/// Steady-state flow profit at the market-consistent state for `v`.
fn steady_profit_at(v: f64, b: f64, p: &ModelParams) -> Result<f64> {
    let (l, _u, theta) = consistent_state_for_v(v, p)?;
    econ::flow_profit(l, v, theta, b, p.vacancy_cost, p)
}

const COARSE_POINTS: usize = 10_000;
const GOLDEN_TOL: f64 = 1e-8;
pub(crate) const V_MAX: f64 = crate::env::DEFAULT_V_MAX;

/// Brute-force oracle for the policy a market-moving optimizer settles on:
/// grid-searches steady flow profit over `v` in `(0, v_max]`, then refines
/// around the maximizer by golden-section search.
pub fn monopsony_steady_state(b: f64, p: &ModelParams) -> Result<MonopsonySolution> {
    p.validate()?;
    if b < 0.0 {
        return Err(Error::domain(format!("benefit must be nonnegative, got {b}")));
    }

    let mut best_i = 1;
    let mut best_profit = f64::NEG_INFINITY;
    for i in 1..=COARSE_POINTS {
        let v = V_MAX * i as f64 / COARSE_POINTS as f64;
        let profit = steady_profit_at(v, b, p)?;
        if profit > best_profit {
            best_profit = profit;
            best_i = i;
        }
    }

    // golden-section refinement on the bracketing neighbors
    let mut lo = V_MAX * (best_i.saturating_sub(1)).max(1) as f64 / COARSE_POINTS as f64;
    let mut hi = V_MAX * (best_i + 1).min(COARSE_POINTS) as f64 / COARSE_POINTS as f64;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = steady_profit_at(x1, b, p)?;
    let mut f2 = steady_profit_at(x2, b, p)?;
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = steady_profit_at(x2, b, p)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = steady_profit_at(x1, b, p)?;
        }
    }

    let v = 0.5 * (lo + hi);
    let (l, _u, theta) = consistent_state_for_v(v, p)?;
    let steady_profit = steady_profit_at(v, b, p)?;
    Ok(MonopsonySolution { v, l, theta, steady_profit })
}
