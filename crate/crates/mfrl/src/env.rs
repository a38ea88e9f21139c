//! The two decision processes a firm can be trained in. The naive
//! environment is the closed loop where the firm's own posting moves market
//! tightness through `theta = v/u`; the mean-field environment freezes
//! tightness at an externally supplied value, making the firm a
//! tightness-taker by construction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::econ::{self, ModelParams};
use crate::error::{Error, Result};

/// Largest vacancy level a firm may post, economy-wide. Keeps the
/// equilibrium posting level interior with headroom on both sides.
pub const DEFAULT_V_MAX: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Naive,
    MeanField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Tightness the mean-field environment holds fixed; ignored by the
    /// naive environment.
    #[serde(default)]
    pub theta_fixed: Option<f64>,
    /// Per-vacancy cost charged in the reward.
    pub cost: f64,
    /// Frozen unemployment benefit entering the wage.
    pub b: f64,
    #[serde(default = "defaults::v_max")]
    pub v_max: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    #[serde(default = "defaults::l_init_range")]
    pub l_init_range: (f64, f64),
    #[serde(default = "defaults::theta_clamp")]
    pub theta_clamp: (f64, f64),
}

mod defaults {
    pub fn v_max() -> f64 {
        super::DEFAULT_V_MAX
    }
    pub fn horizon() -> usize {
        200
    }
    pub fn l_init_range() -> (f64, f64) {
        (0.5, 0.99)
    }
    pub fn theta_clamp() -> (f64, f64) {
        (0.01, 10.0)
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == EnvKind::MeanField {
            match self.theta_fixed {
                Some(t) if t > 0.0 => {}
                _ => {
                    return Err(Error::domain(
                        "mean-field environment needs a strictly positive theta_fixed",
                    ))
                }
            }
        }
        if !(self.cost > 0.0) {
            return Err(Error::domain(format!("cost must be strictly positive, got {}", self.cost)));
        }
        if self.b < 0.0 {
            return Err(Error::domain(format!("benefit must be nonnegative, got {}", self.b)));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::domain(format!("v_max must be strictly positive, got {}", self.v_max)));
        }
        if self.horizon == 0 {
            return Err(Error::domain("horizon must be at least one step"));
        }
        let (lo, hi) = self.l_init_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::domain(format!("bad l_init_range ({lo}, {hi})")));
        }
        let (tlo, thi) = self.theta_clamp;
        if !(tlo > 0.0) || tlo >= thi {
            return Err(Error::domain(format!("bad theta_clamp ({tlo}, {thi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub l: f64,
    pub u: f64,
    pub t: usize,
}

/// Everything one step produces; vacancies and realized tightness are kept
/// for trace dumps and aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub vacancies: f64,
    pub theta: f64,
}

/// Affine action map from the normalized interval to vacancy levels:
/// `v = (a + 1)/2 * v_max`.
pub fn map_action(a_norm: f64, v_max: f64) -> f64 {
    (a_norm.clamp(-1.0, 1.0) + 1.0) / 2.0 * v_max
}

#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    params: ModelParams,
    state: EnvState,
    done: bool,
    /// Actions outside the normalized range, clamped and counted.
    clamped_actions: u64,
}

impl Env {
    pub fn new(cfg: EnvConfig, params: ModelParams) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        Ok(Self {
            cfg,
            params,
            state: EnvState { l: 0.0, u: 1.0, t: 0 },
            done: true, // unusable until reset
            clamped_actions: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> EnvState {
        self.state
    }

    pub fn clamped_actions(&self) -> u64 {
        self.clamped_actions
    }

    /// Draws the initial employment uniformly from `l_init_range`.
    pub fn reset<R: Rng>(&mut self, rng: &mut R) -> EnvState {
        let (lo, hi) = self.cfg.l_init_range;
        let l = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        self.reset_to(l)
    }

    /// Deterministic reset, for tests and diagnostics.
    pub fn reset_to(&mut self, l: f64) -> EnvState {
        let l = l.clamp(0.0, 1.0);
        self.state = EnvState { l, u: 1.0 - l, t: 0 };
        self.done = false;
        self.state
    }

    /// Realized tightness for a posting level at the current state.
    fn tightness(&self, v: f64) -> f64 {
        let (tlo, thi) = self.cfg.theta_clamp;
        match self.cfg.kind {
            EnvKind::MeanField => self.cfg.theta_fixed.expect("validated at construction"),
            EnvKind::Naive => {
                let raw = v / self.state.u;
                if raw.is_nan() {
                    // 0/0 corner: no vacancies in a fully employed market
                    tlo
                } else {
                    raw.clamp(tlo, thi)
                }
            }
        }
    }

    pub fn step(&mut self, a_norm: f64) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if !(-1.0..=1.0).contains(&a_norm) {
            self.clamped_actions += 1;
        }
        let v = map_action(a_norm, self.cfg.v_max);
        let theta = self.tightness(v);
        let l = self.state.l;
        // wage-bill form stays finite as employment hits zero
        let reward = econ::production(l, &self.params)?
            - econ::wage_bill(l, theta, self.cfg.b, &self.params)
            - self.cfg.cost * v;
        let next_l = econ::transition(l, v, theta, &self.params)?;
        let t = self.state.t + 1;
        self.done = t >= self.cfg.horizon;
        self.state = EnvState { l: next_l, u: 1.0 - next_l, t };
        Ok(StepOutcome { state: self.state, reward, done: self.done, vacancies: v, theta })
    }
}
