//! The calibrated mean-field fixed point: compute the effective vacancy
//! cost, repeatedly solve a best response under frozen tightness, re-simulate
//! the population to aggregate a new tightness, damp, and test convergence.
//!
//! The aggregate map is extremely stiff under this calibration: equilibrium
//! unemployment is ~0.03, so the tightness `v/u` produced by an exact best
//! response moves ~36x faster than the field it responds to. A fixed damping
//! step of any useful size therefore limit-cycles. The loop keeps the plain
//! damped update as its trial step and backtracks (halving the step) until
//! the fixed-point residual shrinks, which preserves fixed points, keeps the
//! iteration deterministic, and converges from far-off starts.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::ddpg::{train, DdpgAgent, DdpgConfig, ReplayBuffer};
use crate::econ::ModelParams;
use crate::env::{map_action, Env, EnvConfig, EnvKind};
use crate::equilibrium::{best_response_vi_with, PolicyTable, ValueMode, ViConfig};
use crate::error::{Error, Result};
use crate::neural::Mlp;

/// Model primitives together with the effective vacancy cost that aligns a
/// per-period reward with the capitalized hiring cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedParams {
    pub base: ModelParams,
    pub c_eff: f64,
}

impl CalibratedParams {
    pub fn new(base: ModelParams) -> Result<Self> {
        let c_eff = compute_c_eff(&base)?;
        Ok(Self { base, c_eff })
    }
}

/// Effective cost `(1 + r/lambda) * c`: the flow cost scaled by the return
/// the firm forgoes over the expected job duration.
pub fn compute_c_eff(p: &ModelParams) -> Result<f64> {
    if p.lambda <= 0.0 {
        return Err(Error::domain(format!(
            "separation rate must be strictly positive, got {}",
            p.lambda
        )));
    }
    Ok((1.0 + p.interest_rate / p.lambda) * p.vacancy_cost)
}

/// Damped field update `(1 - omega) * theta + omega * phi`. With `omega = 1`
/// this is the literal undamped iteration.
pub fn update_theta(theta_k: f64, phi: f64, omega: f64) -> f64 {
    debug_assert!(omega > 0.0 && omega <= 1.0);
    (1.0 - omega) * theta_k + omega * phi
}

/// Anything that maps a labor state to a vacancy posting level.
pub trait VacancyPolicy {
    fn vacancies(&self, l: f64, u: f64) -> f64;
}

impl VacancyPolicy for PolicyTable {
    fn vacancies(&self, l: f64, _u: f64) -> f64 {
        self.vacancies_at(l)
    }
}

/// Owned snapshot of a trained actor, usable after the agent moves on.
#[derive(Debug, Clone)]
pub struct ActorPolicy {
    pub actor: Mlp,
    pub v_max: f64,
}

impl VacancyPolicy for ActorPolicy {
    fn vacancies(&self, l: f64, u: f64) -> f64 {
        let (y, _) = self.actor.forward(&[l, u]).expect("actor input is fixed-width");
        map_action(y[0].clamp(-1.0, 1.0), self.v_max)
    }
}

/// Loop configuration. Damping, tolerance and window sizes are the knobs the
/// convergence criteria quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfConfig {
    /// Initial field guess.
    pub theta0: f64,
    /// Nominal (largest) damping step.
    pub omega: f64,
    /// Convergence tolerance on |theta_{k+1} - theta_k|.
    pub tol: f64,
    /// Consecutive sub-tolerance updates required to declare convergence.
    pub consecutive: usize,
    pub max_iterations: usize,
    /// Evaluation rollouts used to aggregate the new field.
    pub n_eval: usize,
    /// Trailing steps per rollout entering the aggregate.
    pub eval_window: usize,
    /// Step halvings allowed per iteration before the update stalls in
    /// place. Zero disables backtracking (plain damped iteration), which is
    /// what learned best responses use since their trial steps are costly.
    pub max_step_halvings: usize,
    /// Keep networks across iterations.
    pub warm_start: bool,
    /// Drop replay experience when the field moves (stale transitions encode
    /// the old tightness).
    pub flush_buffer: bool,
    /// Seed for the evaluation rollout initial states; fixed so the
    /// aggregator is a deterministic map of the field.
    pub eval_seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            theta0: 0.3,
            omega: 0.5,
            tol: 0.01,
            consecutive: 3,
            max_iterations: 30,
            n_eval: 20,
            eval_window: 100,
            max_step_halvings: 8,
            warm_start: true,
            flush_buffer: true,
            eval_seed: 7_121_619,
        }
    }
}

/// Stationary policy behavior measured by the aggregation rollouts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PolicyStats {
    pub eval_l: f64,
    pub eval_v: f64,
    pub eval_reward: f64,
}

/// Aggregator output for one field value.
#[derive(Debug, Clone, Copy)]
pub struct EvalOutcome {
    /// Aggregated tightness, clamped into the environment's theta range.
    pub phi: f64,
    /// True when the rollouts were degenerate (no posting, or saturated
    /// employment) and `phi` is a clamp rather than a measurement.
    pub degenerate: bool,
    pub stats: PolicyStats,
}

/// The field iteration record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFieldTrace {
    /// theta^(0..K); length is iterations + 1.
    pub theta_history: Vec<f64>,
    /// Aggregator outputs before damping, one per iteration.
    pub phi_history: Vec<f64>,
    pub policy_stats: Vec<PolicyStats>,
    pub degenerate: Vec<bool>,
    /// Realized damping per iteration (after any backtracking; 0 = stalled).
    pub effective_omegas: Vec<f64>,
    pub converged: bool,
    /// Successive-gap ratios |d theta_{k+1}| / |d theta_k|; `None` where the
    /// denominator is numerically zero.
    pub ratios: Vec<Option<f64>>,
}

impl MeanFieldTrace {
    pub fn iterations(&self) -> usize {
        self.theta_history.len() - 1
    }

    pub fn final_theta(&self) -> f64 {
        *self.theta_history.last().unwrap()
    }
}

/// Simulates the population under a fixed policy in the mean-field
/// environment at `theta_k` and aggregates `mean(v) / mean(u)` over the
/// trailing window of every rollout, pooled.
pub fn evaluate_policy_theta(
    policy: &dyn VacancyPolicy,
    theta_k: f64,
    env_template: &EnvConfig,
    params: &ModelParams,
    mf: &MfConfig,
) -> Result<EvalOutcome> {
    let mut cfg = *env_template;
    cfg.kind = EnvKind::MeanField;
    cfg.theta_fixed = Some(theta_k);
    let mut env = Env::new(cfg, *params)?;
    let mut rng = StdRng::seed_from_u64(mf.eval_seed);

    let mut sum_v = 0.0;
    let mut sum_u = 0.0;
    let mut sum_l = 0.0;
    let mut sum_r = 0.0;
    let mut count = 0usize;
    for _ in 0..mf.n_eval {
        let mut state = env.reset(&mut rng);
        let horizon = env.config().horizon;
        let start = horizon.saturating_sub(mf.eval_window);
        for t in 0..horizon {
            let v = policy.vacancies(state.l, state.u).clamp(0.0, cfg.v_max);
            let a_norm = 2.0 * v / cfg.v_max - 1.0;
            let out = env.step(a_norm)?;
            if t >= start {
                sum_v += v;
                sum_u += state.u;
                sum_l += state.l;
                sum_r += out.reward;
                count += 1;
            }
            state = out.state;
        }
    }
    let n = count.max(1) as f64;
    let stats = PolicyStats { eval_l: sum_l / n, eval_v: sum_v / n, eval_reward: sum_r / n };
    let (theta_min, theta_max) = cfg.theta_clamp;

    // degenerate corners: an idle policy pins the field at the floor, a
    // saturated labor market (u -> 0) at the ceiling
    if sum_v / n < 1e-12 {
        return Ok(EvalOutcome { phi: theta_min, degenerate: true, stats });
    }
    let raw = sum_v / sum_u;
    if !raw.is_finite() || raw > theta_max {
        return Ok(EvalOutcome { phi: theta_max, degenerate: true, stats });
    }
    if raw < theta_min {
        return Ok(EvalOutcome { phi: theta_min, degenerate: true, stats });
    }
    Ok(EvalOutcome { phi: raw, degenerate: false, stats })
}

fn gap_ratios(theta_history: &[f64]) -> Vec<Option<f64>> {
    let gaps: Vec<f64> =
        theta_history.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    gaps.windows(2)
        .map(|w| if w[0] > 1e-12 { Some(w[1] / w[0]) } else { None })
        .collect()
}

/// Successive-gap ratios of a trace and their geometric mean, the empirical
/// contraction factor. Ratios with numerically zero denominators are
/// skipped; a constant trace yields an empty sequence and no estimate.
pub fn contraction_ratios(trace: &MeanFieldTrace) -> Result<(Vec<f64>, Option<f64>)> {
    if trace.iterations() < 3 {
        return Err(Error::domain(format!(
            "contraction diagnostics need at least 3 iterations, got {}",
            trace.iterations()
        )));
    }
    let ratios: Vec<f64> = gap_ratios(&trace.theta_history).into_iter().flatten().collect();
    if ratios.is_empty() {
        return Ok((ratios, None));
    }
    let log_mean = ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64;
    Ok((ratios.clone(), Some(log_mean.exp())))
}

/// The generic field iteration, driven by any best-response solver. Each
/// iteration proposes the damped update, re-solves and re-aggregates at the
/// proposal, and accepts once the fixed-point residual has shrunk enough;
/// with `max_step_halvings = 0` the first proposal is always taken.
pub fn run_mean_field_loop(
    mf: &MfConfig,
    env_template: &EnvConfig,
    params: &ModelParams,
    responder: &mut dyn FnMut(f64) -> Result<Box<dyn VacancyPolicy>>,
) -> Result<MeanFieldTrace> {
    if !(mf.omega > 0.0 && mf.omega <= 1.0) {
        return Err(Error::domain(format!("omega must lie in (0,1], got {}", mf.omega)));
    }
    let mut theta = mf.theta0;
    let policy = responder(theta)?;
    let mut eval = evaluate_policy_theta(policy.as_ref(), theta, env_template, params, mf)?;

    let mut theta_history = vec![theta];
    let mut phi_history = Vec::new();
    let mut policy_stats = Vec::new();
    let mut degenerate = Vec::new();
    let mut effective_omegas = Vec::new();
    let mut hits = 0usize;
    let mut converged = false;

    for _ in 0..mf.max_iterations {
        let residual = (eval.phi - theta).abs();
        phi_history.push(eval.phi);
        policy_stats.push(eval.stats);
        degenerate.push(eval.degenerate);

        // propose the damped step; halve while the residual refuses to shrink
        let mut accepted: Option<(f64, EvalOutcome, f64)> = None;
        let mut omega = mf.omega;
        for attempt in 0..=mf.max_step_halvings {
            let trial_theta = update_theta(theta, eval.phi, omega);
            let trial_policy = responder(trial_theta)?;
            let trial_eval =
                evaluate_policy_theta(trial_policy.as_ref(), trial_theta, env_template, params, mf)?;
            let trial_residual = (trial_eval.phi - trial_theta).abs();
            let sufficient = trial_residual <= (1.0 - 0.25 * omega) * residual;
            if sufficient || attempt == mf.max_step_halvings && mf.max_step_halvings == 0 {
                accepted = Some((trial_theta, trial_eval, omega));
                break;
            }
            omega *= 0.5;
        }

        let delta;
        match accepted {
            Some((next_theta, next_eval, used_omega)) => {
                delta = (next_theta - theta).abs();
                theta = next_theta;
                eval = next_eval;
                effective_omegas.push(used_omega);
            }
            None => {
                // every step grows the residual: the field is already at the
                // noise floor of the aggregator, hold position
                delta = 0.0;
                effective_omegas.push(0.0);
            }
        }
        theta_history.push(theta);

        hits = if delta < mf.tol { hits + 1 } else { 0 };
        if hits >= mf.consecutive {
            converged = true;
            break;
        }
    }

    let ratios = gap_ratios(&theta_history);
    Ok(MeanFieldTrace {
        theta_history,
        phi_history,
        policy_stats,
        degenerate,
        effective_omegas,
        converged,
        ratios,
    })
}

/// Field iteration with the deterministic value-iteration best response;
/// validates the loop independently of learning noise.
pub fn run_oracle_mfrl(
    mf: &MfConfig,
    env_template: &EnvConfig,
    params: &ModelParams,
    mode: ValueMode,
) -> Result<MeanFieldTrace> {
    let vi_cfg = ViConfig { v_max: env_template.v_max, ..ViConfig::default() };
    let cost = env_template.cost;
    let b = env_template.b;
    let p = *params;
    let mut responder = move |theta: f64| -> Result<Box<dyn VacancyPolicy>> {
        let pt = best_response_vi_with(theta, cost, b, mode, &p, &vi_cfg)?;
        Ok(Box::new(pt) as Box<dyn VacancyPolicy>)
    };
    run_mean_field_loop(mf, env_template, params, &mut responder)
}

/// Field iteration with the learned best response. Networks persist across
/// iterations when `warm_start` is set; the replay buffer is flushed per
/// iteration when `flush_buffer` is set. `on_iteration` fires after every
/// inner training run with the iteration index and the current agent, for
/// checkpointing.
pub fn run_calibrated_mfrl(
    mf: &MfConfig,
    env_template: &EnvConfig,
    params: &ModelParams,
    ddpg: &DdpgConfig,
    seed: u64,
    mut on_iteration: impl FnMut(usize, &DdpgAgent) -> Result<()>,
) -> Result<MeanFieldTrace> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut agent = DdpgAgent::new(ddpg, &mut rng)?;
    let mut buffer = ReplayBuffer::new(ddpg.buffer_capacity, seed ^ 0x5851_f42d);
    let mut iteration = 0usize;
    let template = *env_template;
    let p = *params;
    let ddpg_cfg = *ddpg;
    let mf_copy = *mf;

    let mut responder = move |theta: f64| -> Result<Box<dyn VacancyPolicy>> {
        if mf_copy.flush_buffer {
            buffer.clear();
        }
        if !mf_copy.warm_start {
            agent = DdpgAgent::new(&ddpg_cfg, &mut rng)?;
        }
        let mut cfg = template;
        cfg.kind = EnvKind::MeanField;
        cfg.theta_fixed = Some(theta);
        let mut env = Env::new(cfg, p)?;
        train(&mut agent, &mut env, &mut buffer, ddpg_cfg.episodes, &ddpg_cfg, &mut rng)?;
        on_iteration(iteration, &agent)?;
        iteration += 1;
        Ok(Box::new(ActorPolicy { actor: agent.actor.clone(), v_max: template.v_max })
            as Box<dyn VacancyPolicy>)
    };
    run_mean_field_loop(mf, env_template, params, &mut responder)
}
