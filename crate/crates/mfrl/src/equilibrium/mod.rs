//! Deterministic benchmarks: the theoretical steady state of the economy and
//! learning-free oracles (grid search, value iteration) that pin down what an
//! optimizing firm would do. These are the reference points every learned
//! policy is judged against.

mod consistency;
mod value_iteration;

pub use consistency::{consistent_state_for_v, monopsony_steady_state, MonopsonySolution};
pub use value_iteration::{
    best_response_vi, best_response_vi_with, implied_theta_from_policy, PolicyTable, ValueMode,
    ViConfig,
};

use serde::{Deserialize, Serialize};

use crate::econ::ModelParams;
use crate::error::{Error, Result};

/// The equilibrium tuple solved from the steady-state equation system.
///
/// Serializes with the short conventional keys (`l`, `u`, `q`, `w`, `v`,
/// `theta`, `b`) used by `steady_state.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Employment.
    pub l: f64,
    /// Unemployment.
    pub u: f64,
    /// Vacancy fill probability.
    pub q: f64,
    /// Wage.
    pub w: f64,
    /// Vacancies.
    pub v: f64,
    /// Market tightness v/u.
    pub theta: f64,
    /// Unemployment benefit (rho times the wage).
    pub b: f64,
}

impl SteadyState {
    fn from_vec(x: &[f64; 7]) -> Self {
        SteadyState { l: x[0], u: x[1], q: x[2], w: x[3], v: x[4], theta: x[5], b: x[6] }
    }

    fn to_vec(self) -> [f64; 7] {
        [self.l, self.u, self.q, self.w, self.v, self.theta, self.b]
    }
}

/// The seven residuals of the steady-state system, in order: job creation,
/// wage equation, flow balance, matching function, tightness definition,
/// unit worker mass, benefit rule.
pub fn steady_state_residuals(s: &SteadyState, p: &ModelParams) -> Result<[f64; 7]> {
    for (name, v) in [
        ("l", s.l),
        ("u", s.u),
        ("q", s.q),
        ("w", s.w),
        ("v", s.v),
        ("theta", s.theta),
        ("b", s.b),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("steady state field {name} must be strictly positive, got {v}")));
        }
    }
    if s.l >= 1.0 {
        return Err(Error::domain(format!("employment must be below one, got {}", s.l)));
    }
    Ok(residuals_unchecked(&s.to_vec(), p))
}

fn residuals_unchecked(x: &[f64; 7], p: &ModelParams) -> [f64; 7] {
    let [l, u, q, w, v, theta, b] = *x;
    let denom = p.eta * p.alpha + 1.0 - p.eta;
    let mpl = p.alpha * p.productivity * l.powf(p.alpha - 1.0);
    let bargained = p.eta * p.alpha * mpl / denom; // eta*alpha^2*A*l^(alpha-1) / denom

    [
        // job creation: f'(l) - w(l) - w'(l) l = (r + lambda) c / q
        mpl - bargained
            - (1.0 - p.eta) * b
            - p.eta * p.vacancy_cost * theta
            - (p.interest_rate + p.lambda) * p.vacancy_cost / q,
        // wage equation
        w - bargained / p.alpha - (1.0 - p.eta) * b - p.eta * p.vacancy_cost * theta,
        // flow balance: separations equal hires
        p.lambda * l - q * v,
        // matching function
        q - p.match_efficiency * theta.powf(-p.phi),
        // tightness definition
        theta - v / u,
        // unit worker mass
        l + u - 1.0,
        // benefit rule
        b - p.rho * w,
    ]
}

fn max_abs(r: &[f64; 7]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves the 7x7 linear system `m * x = rhs` by Gaussian elimination with
/// partial pivoting. Small and dense; no library needed.
fn solve_linear_7(mut m: [[f64; 7]; 7], mut rhs: [f64; 7]) -> Option<[f64; 7]> {
    let n = 7;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0f64; 7];
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for k in col + 1..n {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    Some(x)
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-7;

/// Keeps Newton iterates inside the domain of the residual function.
fn clamp_feasible(x: &mut [f64; 7]) {
    for xi in x.iter_mut() {
        *xi = xi.max(1e-9);
    }
    x[0] = x[0].min(1.0 - 1e-12); // l < 1
}

/// Solves the steady-state system by damped Newton iteration with a
/// forward-difference Jacobian. The step is halved until the residual norm
/// decreases; iterates are clamped into the feasible orthant.
pub fn solve_steady_state(p: &ModelParams) -> Result<SteadyState> {
    p.validate()?;
    let guess = [
        0.9,
        0.1,
        p.match_efficiency,
        p.alpha * p.productivity * 0.9f64.powf(p.alpha - 1.0),
        0.05,
        0.5,
        0.5,
    ];
    solve_steady_state_from(guess, p)
}

/// Same solver from a caller-supplied starting point (used by the
/// initialization-robustness checks).
pub fn solve_steady_state_from(mut x: [f64; 7], p: &ModelParams) -> Result<SteadyState> {
    clamp_feasible(&mut x);
    let mut res = residuals_unchecked(&x, p);

    for _ in 0..NEWTON_MAX_ITER {
        if max_abs(&res) < NEWTON_TOL {
            return Ok(SteadyState::from_vec(&x));
        }

        // forward-difference Jacobian, column per unknown
        let mut jac = [[0.0f64; 7]; 7];
        for col in 0..7 {
            let mut xh = x;
            let h = FD_STEP * xh[col].abs().max(1.0);
            xh[col] += h;
            let rh = residuals_unchecked(&xh, p);
            for row in 0..7 {
                jac[row][col] = (rh[row] - res[row]) / h;
            }
        }

        let neg_res = {
            let mut r = res;
            for ri in r.iter_mut() {
                *ri = -*ri;
            }
            r
        };
        let step = solve_linear_7(jac, neg_res).ok_or_else(|| Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual_norm: max_abs(&res),
            last_iterate: x.to_vec(),
        })?;

        // damping: halve until the residual norm decreases
        let norm0 = max_abs(&res);
        let mut damp = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = x;
            for i in 0..7 {
                trial[i] += damp * step[i];
            }
            clamp_feasible(&mut trial);
            let trial_res = residuals_unchecked(&trial, p);
            if max_abs(&trial_res).is_finite() && max_abs(&trial_res) < norm0 {
                x = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            damp *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: NEWTON_MAX_ITER,
                residual_norm: norm0,
                last_iterate: x.to_vec(),
            });
        }
    }

    if max_abs(&res) < NEWTON_TOL {
        return Ok(SteadyState::from_vec(&x));
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual_norm: max_abs(&res),
        last_iterate: x.to_vec(),
    })
}

/// Benefit level implied by the solved equilibrium, `rho * w`. The
/// environments freeze `b` at this value.
pub fn equilibrium_benefit(p: &ModelParams) -> Result<f64> {
    Ok(solve_steady_state(p)?.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table2(b: f64) -> SteadyState {
        SteadyState { l: 0.967, u: 0.033, q: 0.552, w: 0.831, v: 0.025, theta: 0.767, b }
    }

    #[test]
    fn residuals_near_zero_at_published_state() {
        let p = ModelParams::default();
        let res = steady_state_residuals(&table2(0.4986), &p).unwrap();
        for (i, r) in res.iter().enumerate() {
            assert!(r.abs() < 1e-2, "residual {i} too large: {r}");
        }
    }

    #[test]
    fn tightness_residual_is_definitional() {
        let p = ModelParams::default();
        let base = steady_state_residuals(&table2(0.4986), &p).unwrap();
        let mut bumped = table2(0.4986);
        bumped.theta += 0.1;
        let res = steady_state_residuals(&bumped, &p).unwrap();
        // theta enters the fifth equation linearly with unit coefficient
        assert!((res[4] - base[4] - 0.1).abs() < 1e-12);
        assert!(res[4].abs() > 1e-3);
    }

    #[test]
    fn residuals_reject_infeasible_states() {
        let p = ModelParams::default();
        let mut s = table2(0.4986);
        s.q = 0.0;
        assert!(steady_state_residuals(&s, &p).is_err());
        let mut s = table2(0.4986);
        s.l = 1.0;
        assert!(steady_state_residuals(&s, &p).is_err());
    }

    #[test]
    fn solver_reproduces_published_steady_state() {
        let p = ModelParams::default();
        let s = solve_steady_state(&p).unwrap();
        let res = steady_state_residuals(&s, &p).unwrap();
        assert!(super::max_abs(&res) < 1e-10, "residual norm {}", super::max_abs(&res));

        assert!((s.l - 0.967).abs() < 1e-3, "l = {}", s.l);
        assert!((s.u - 0.033).abs() < 1e-3, "u = {}", s.u);
        assert!((s.q - 0.552).abs() < 1e-3, "q = {}", s.q);
        assert!((s.w - 0.831).abs() < 1e-3, "w = {}", s.w);
        assert!((s.v - 0.025).abs() < 1e-3, "v = {}", s.v);
        assert!((s.theta - 0.767).abs() < 1e-3, "theta = {}", s.theta);
        assert!((s.b - p.rho * s.w).abs() < 1e-10);
    }

    #[test]
    fn higher_vacancy_cost_lowers_tightness() {
        let mut p = ModelParams::default();
        let base = solve_steady_state(&p).unwrap();
        p.vacancy_cost *= 2.0;
        let expensive = solve_steady_state(&p).unwrap();
        assert!(expensive.theta < base.theta);
        let res = steady_state_residuals(&expensive, &p).unwrap();
        assert!(super::max_abs(&res) < 1e-10);
    }

    #[test]
    fn newton_is_initialization_robust() {
        let p = ModelParams::default();
        let mut rng = StdRng::seed_from_u64(42);
        let mut solutions = Vec::new();
        for _ in 0..20 {
            let l = rng.gen_range(0.3..0.99);
            let start = [
                l,
                rng.gen_range(0.01..0.7),
                rng.gen_range(0.1..1.0),
                rng.gen_range(0.3..1.5),
                rng.gen_range(0.001..0.08),
                rng.gen_range(0.05..3.0),
                rng.gen_range(0.1..0.9),
            ];
            let s = solve_steady_state_from(start, &p)
                .unwrap_or_else(|e| panic!("failed from {start:?}: {e}"));
            solutions.push(s.to_vec());
        }
        for a in &solutions {
            for b in &solutions {
                for k in 0..7 {
                    assert!((a[k] - b[k]).abs() < 1e-8, "component {k}: {} vs {}", a[k], b[k]);
                }
            }
        }
    }

    #[test]
    fn steady_state_serializes_with_short_keys() {
        let p = ModelParams::default();
        let s = solve_steady_state(&p).unwrap();
        let json = serde_json::to_value(s).unwrap();
        for key in ["l", "u", "q", "w", "v", "theta", "b"] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        let back: SteadyState = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }
}
