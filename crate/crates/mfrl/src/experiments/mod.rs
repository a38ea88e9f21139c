//! Experiment orchestration: each paper-level experiment is one library
//! function that resolves its configuration, echoes it to the output
//! directory, runs every requested seed in its own worker thread, and
//! persists CSV traces plus a JSON summary. The thin `mfrl` binary maps
//! subcommands onto these functions.

pub mod config;
pub mod io;
pub mod verify;

pub use config::{CliOverrides, CommandKind, CostKind, ExperimentConfig};
pub use verify::{run_verification, VerifyReport};

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::ddpg::{train, DdpgAgent, ReplayBuffer, TrainingStats};
use crate::env::{Env, EnvConfig, EnvKind};
use crate::equilibrium::{monopsony_steady_state, solve_steady_state, SteadyState};
use crate::error::{Error, Result};
use crate::mf_loop::{contraction_ratios, run_calibrated_mfrl, run_oracle_mfrl, MeanFieldTrace};

/// Where one command run writes its outputs:
/// `<outdir>/<command>/<timestamp>/{config.json, seed_<n>/..., summary.json}`.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub dir: PathBuf,
}

fn timestamp_millis() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).expect("clock before epoch").as_millis()
}

/// Creates the run directory and echoes the fully-resolved configuration
/// before any work happens, so every run is reproducible from its own
/// records.
pub fn prepare_run(command: CommandKind, config: ExperimentConfig) -> Result<RunContext> {
    config.validate()?;
    let dir = Path::new(&config.outdir)
        .join(command.dir_name())
        .join(format!("{:013}", timestamp_millis()));
    std::fs::create_dir_all(&dir)?;
    io::write_json(&dir.join("config.json"), &config)?;
    Ok(RunContext { config, dir })
}

fn seed_dir(ctx: &RunContext, seed: u64) -> Result<PathBuf> {
    let dir = ctx.dir.join(format!("seed_{seed}"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Mean and sample standard deviation; the deviation is absent for a single
/// observation.
fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

fn env_template(cfg: &ExperimentConfig, kind: EnvKind) -> Result<EnvConfig> {
    let b = match cfg.env.b {
        Some(b) => b,
        None => solve_steady_state(&cfg.model)?.b,
    };
    Ok(EnvConfig {
        kind,
        theta_fixed: if kind == EnvKind::MeanField { Some(cfg.mf.mf.theta0) } else { None },
        cost: cfg.resolved_cost()?,
        b,
        v_max: cfg.env.v_max,
        horizon: cfg.env.horizon,
        l_init_range: cfg.env.l_init_range,
        theta_clamp: cfg.env.theta_clamp,
    })
}

// ---------------------------------------------------------------------------
// steady state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateOutput {
    pub steady_state: SteadyState,
    pub max_residual: f64,
    pub path: PathBuf,
    pub elapsed_seconds: f64,
}

/// Solves and persists the theoretical benchmark as `steady_state.json`.
pub fn cmd_steady_state(config: ExperimentConfig) -> Result<SteadyStateOutput> {
    let ctx = prepare_run(CommandKind::SteadyState, config)?;
    let t0 = Instant::now();
    let s = solve_steady_state(&ctx.config.model)?;
    let res = crate::equilibrium::steady_state_residuals(&s, &ctx.config.model)?;
    let max_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let path = ctx.dir.join("steady_state.json");
    io::write_json(&path, &s)?;
    println!("l      = {:.6}", s.l);
    println!("u      = {:.6}", s.u);
    println!("q      = {:.6}", s.q);
    println!("w      = {:.6}", s.w);
    println!("v      = {:.6}", s.v);
    println!("theta  = {:.6}", s.theta);
    println!("b      = {:.6}", s.b);
    println!("max |residual| = {max_residual:.3e}");
    Ok(SteadyStateOutput { steady_state: s, max_residual, path, elapsed_seconds: t0.elapsed().as_secs_f64() })
}

// ---------------------------------------------------------------------------
// naive training (and the parametric-only ablation, which shares it)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct NaiveSeedResult {
    pub seed: u64,
    pub theta: f64,
    pub l: f64,
    pub v: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NaiveSummary {
    pub per_seed: Vec<NaiveSeedResult>,
    pub mean_theta: f64,
    pub std_theta: Option<f64>,
    pub theta_star: f64,
    /// Tightness a deterministic market-moving optimizer settles on; the
    /// reference point the learned policies are expected to approach.
    pub monopsony_theta: f64,
    pub cost: f64,
}

#[derive(Debug)]
pub struct NaiveOutput {
    pub summary: NaiveSummary,
    pub dir: PathBuf,
}

fn training_csv(stats: &TrainingStats) -> Vec<String> {
    stats
        .episodes
        .iter()
        .map(|e| {
            format!(
                "{},{},{},{},{},{}",
                e.episode, e.mean_reward, e.sigma, e.eval_theta, e.eval_l, e.eval_v
            )
        })
        .collect()
}

fn run_naive_like(command: CommandKind, config: ExperimentConfig) -> Result<NaiveOutput> {
    let ctx = prepare_run(command, config)?;
    let cfg = &ctx.config;
    let tpl = env_template(cfg, EnvKind::Naive)?;
    let equilibrium = solve_steady_state(&cfg.model)?;
    let monopsony = monopsony_steady_state(tpl.b, &cfg.model)?;

    let results: Vec<Result<(u64, TrainingStats)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let ddpg_cfg = cfg.ddpg;
                let model = cfg.model;
                scope.spawn(move || -> Result<(u64, TrainingStats)> {
                    let mut rng = StdRng::seed_from_u64(seed);
                    let mut agent = DdpgAgent::new(&ddpg_cfg, &mut rng)?;
                    let mut buffer =
                        ReplayBuffer::new(ddpg_cfg.buffer_capacity, seed ^ 0x5851_f42d);
                    let mut env = Env::new(tpl, model)?;
                    let stats =
                        train(&mut agent, &mut env, &mut buffer, ddpg_cfg.episodes, &ddpg_cfg, &mut rng)?;
                    Ok((seed, stats))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
    });

    let mut per_seed = Vec::new();
    for res in results {
        let (seed, stats) = res?;
        let dir = seed_dir(&ctx, seed)?;
        io::write_csv(
            &dir.join("training.csv"),
            "episode,mean_reward,sigma,eval_theta,eval_l,eval_v",
            training_csv(&stats),
        )?;
        let f = stats.final_eval;
        per_seed.push(NaiveSeedResult { seed, theta: f.theta, l: f.l, v: f.v, reward: f.reward });
    }
    per_seed.sort_by_key(|r| r.seed);

    let thetas: Vec<f64> = per_seed.iter().map(|r| r.theta).collect();
    let (mean_theta, std_theta) = mean_std(&thetas);
    let summary = NaiveSummary {
        per_seed,
        mean_theta,
        std_theta,
        theta_star: equilibrium.theta,
        monopsony_theta: monopsony.theta,
        cost: tpl.cost,
    };
    io::write_json(&ctx.dir.join("summary.json"), &summary)?;
    println!(
        "converged theta over {} seed(s): mean {:.4}{} (equilibrium {:.4}, market-moving oracle {:.4})",
        summary.per_seed.len(),
        mean_theta,
        std_theta.map(|s| format!(" +- {s:.4}")).unwrap_or_default(),
        summary.theta_star,
        summary.monopsony_theta,
    );
    Ok(NaiveOutput { summary, dir: ctx.dir })
}

/// Trains the learner in the closed-loop environment at the configured cost
/// and reports where tightness settles.
pub fn cmd_naive(config: ExperimentConfig) -> Result<NaiveOutput> {
    run_naive_like(CommandKind::Naive, config)
}

// ---------------------------------------------------------------------------
// calibrated mean-field runs (and the structural-only ablation)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CalibratedSeedResult {
    pub seed: u64,
    /// Field value the run settled on: the mean of the trailing iterates,
    /// which is the honest read of a trace that fluctuates around its rest
    /// point (converged traces have a flat tail, so this matches the final
    /// value there).
    pub theta: f64,
    pub final_theta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub contraction_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibratedSummary {
    pub per_seed: Vec<CalibratedSeedResult>,
    pub mean_theta: f64,
    pub std_theta: Option<f64>,
    pub theta_star: f64,
    pub cost: f64,
    pub oracle: bool,
    pub non_converged_seeds: Vec<u64>,
}

#[derive(Debug)]
pub struct CalibratedOutput {
    pub summary: CalibratedSummary,
    pub traces: Vec<(u64, MeanFieldTrace)>,
    pub dir: PathBuf,
}

fn trace_csv(trace: &MeanFieldTrace) -> Vec<String> {
    (0..trace.iterations())
        .map(|k| {
            let ratio = if k >= 1 {
                trace.ratios.get(k - 1).copied().flatten().map(|r| r.to_string()).unwrap_or_default()
            } else {
                String::new()
            };
            format!(
                "{},{},{},{},{},{},{}",
                k,
                trace.theta_history[k],
                trace.phi_history[k],
                trace.policy_stats[k].eval_l,
                trace.policy_stats[k].eval_v,
                trace.policy_stats[k].eval_reward,
                ratio
            )
        })
        .collect()
}

fn run_mean_field_like(
    command: CommandKind,
    mut config: ExperimentConfig,
    oracle: bool,
) -> Result<CalibratedOutput> {
    // resolve reward centering before the config is echoed: the learned
    // loop centers rewards on the equilibrium flow profit at its cost
    if !oracle {
        if config.mf.reward_baseline.is_none() {
            let s = solve_steady_state(&config.model)?;
            let cost = config.resolved_cost()?;
            config.mf.reward_baseline =
                Some(crate::econ::flow_profit(s.l, s.v, s.theta, s.b, cost, &config.model)?);
        }
        config.ddpg.reward_baseline = config.mf.reward_baseline.expect("resolved above");
    }
    let ctx = prepare_run(command, config)?;
    let cfg = &ctx.config;
    let tpl = env_template(cfg, EnvKind::MeanField)?;
    let equilibrium = solve_steady_state(&cfg.model)?;

    let mut traces: Vec<(u64, MeanFieldTrace)> = Vec::new();
    if oracle {
        // fully deterministic; seeds play no role
        let trace = run_oracle_mfrl(&cfg.mf.mf, &tpl, &cfg.model, cfg.mf.oracle_mode)?;
        traces.push((0, trace));
    } else {
        let results: Vec<Result<(u64, MeanFieldTrace)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let mf = cfg.mf.mf;
                    let ddpg_cfg = cfg.ddpg;
                    let model = cfg.model;
                    let want_ckpt = cfg.mf.checkpoints;
                    let dir = ctx.dir.join(format!("seed_{seed}"));
                    scope.spawn(move || -> Result<(u64, MeanFieldTrace)> {
                        std::fs::create_dir_all(&dir)?;
                        let trace = run_calibrated_mfrl(
                            &mf,
                            &tpl,
                            &model,
                            &ddpg_cfg,
                            seed,
                            |k, agent| {
                                if want_ckpt {
                                    io::write_checkpoint(
                                        &dir.join(format!("actor_{k}.ckpt")),
                                        &agent.actor,
                                    )?;
                                    io::write_checkpoint(
                                        &dir.join(format!("critic_{k}.ckpt")),
                                        &agent.critic,
                                    )?;
                                }
                                Ok(())
                            },
                        )?;
                        Ok((seed, trace))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
        });
        for res in results {
            traces.push(res?);
        }
        traces.sort_by_key(|(seed, _)| *seed);
    }

    let mut per_seed = Vec::new();
    for (seed, trace) in &traces {
        let dir = seed_dir(&ctx, *seed)?;
        io::write_csv(
            &dir.join("trace.csv"),
            "k,theta,phi,eval_l,eval_v,eval_reward,ratio",
            trace_csv(trace),
        )?;
        io::write_json(&dir.join("trace.json"), trace)?;
        let contraction_factor =
            if trace.iterations() >= 3 { contraction_ratios(trace)?.1 } else { None };
        let tail = trace.theta_history.len().saturating_sub(5);
        let tail_mean = trace.theta_history[tail..].iter().sum::<f64>()
            / (trace.theta_history.len() - tail) as f64;
        per_seed.push(CalibratedSeedResult {
            seed: *seed,
            theta: tail_mean,
            final_theta: trace.final_theta(),
            converged: trace.converged,
            iterations: trace.iterations(),
            contraction_factor,
        });
    }

    let thetas: Vec<f64> = per_seed.iter().map(|r| r.theta).collect();
    let (mean_theta, std_theta) = mean_std(&thetas);
    let non_converged_seeds =
        per_seed.iter().filter(|r| !r.converged).map(|r| r.seed).collect();
    let summary = CalibratedSummary {
        per_seed,
        mean_theta,
        std_theta,
        theta_star: equilibrium.theta,
        cost: tpl.cost,
        oracle,
        non_converged_seeds,
    };
    io::write_json(&ctx.dir.join("summary.json"), &summary)?;
    println!(
        "field iteration over {} run(s): mean final theta {:.4}{} (equilibrium {:.4}, cost {:.4})",
        summary.per_seed.len(),
        mean_theta,
        std_theta.map(|s| format!(" +- {s:.4}")).unwrap_or_default(),
        summary.theta_star,
        summary.cost,
    );
    Ok(CalibratedOutput { summary, traces, dir: ctx.dir })
}

/// The full correction: mean-field environment plus effective cost. With
/// `oracle` the inner best response is the deterministic dynamic-programming
/// solver instead of the learner.
pub fn cmd_calibrated(config: ExperimentConfig, oracle: bool) -> Result<CalibratedOutput> {
    run_mean_field_like(CommandKind::Calibrated { oracle }, config, oracle)
}

/// Which single correction an ablation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationKind {
    /// Mean-field environment, uncalibrated cost; hiring overshoots.
    StructuralOnly,
    /// Closed-loop environment, calibrated cost; the market-moving behavior
    /// survives.
    ParametricOnly,
}

#[derive(Debug)]
pub enum AblationOutput {
    Structural(CalibratedOutput),
    Parametric(NaiveOutput),
}

impl AblationOutput {
    pub fn mean_theta(&self) -> f64 {
        match self {
            AblationOutput::Structural(o) => o.summary.mean_theta,
            AblationOutput::Parametric(o) => o.summary.mean_theta,
        }
    }

    pub fn dir(&self) -> &Path {
        match self {
            AblationOutput::Structural(o) => &o.dir,
            AblationOutput::Parametric(o) => &o.dir,
        }
    }
}

/// Runs one of the single-correction ablations.
pub fn cmd_ablation(config: ExperimentConfig, which: AblationKind) -> Result<AblationOutput> {
    match which {
        AblationKind::StructuralOnly => Ok(AblationOutput::Structural(run_mean_field_like(
            CommandKind::AblationStructural,
            config,
            false,
        )?)),
        AblationKind::ParametricOnly => Ok(AblationOutput::Parametric(run_naive_like(
            CommandKind::AblationParametric,
            config,
        )?)),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct VerifyOutput {
    pub report: VerifyReport,
    pub report_path: PathBuf,
    pub dir: PathBuf,
}

/// Runs every learning-free check and writes a machine-readable report.
pub fn cmd_verify(config: ExperimentConfig, report_path: Option<PathBuf>) -> Result<VerifyOutput> {
    let ctx = prepare_run(CommandKind::Verify, config)?;
    let report = run_verification(&ctx.config.model)?;
    for c in &report.checks {
        println!("[{}] {} - {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for i in &report.info {
        println!("[INFO] {} - {}", i.name, i.detail);
    }
    let default_path = ctx.dir.join("report.json");
    io::write_json(&default_path, &report)?;
    let report_path = match report_path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            io::write_json(&p, &report)?;
            p
        }
        None => default_path,
    };
    if !report.all_passed {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(Error::Config(format!("verification failed: {}", failing.join(", "))));
    }
    Ok(VerifyOutput { report, report_path, dir: ctx.dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_outdir(tag: &str) -> String {
        let dir = std::env::temp_dir().join(format!("mfrl-exp-{tag}-{}", std::process::id()));
        dir.to_string_lossy().into_owned()
    }

    #[test]
    fn steady_state_command_persists_full_precision_json() {
        let mut cfg = ExperimentConfig::default_for(CommandKind::SteadyState);
        cfg.outdir = tmp_outdir("ss");
        let out = cmd_steady_state(cfg).unwrap();
        assert!(out.elapsed_seconds < 1.0);
        assert!((out.steady_state.theta - 0.767).abs() < 1e-3);
        assert!(out.max_residual < 1e-10);
        let text = std::fs::read_to_string(&out.path).unwrap();
        let parsed: SteadyState = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, out.steady_state);
        // config echo written next to it
        let dir = out.path.parent().unwrap();
        assert!(dir.join("config.json").exists());
        std::fs::remove_dir_all(Path::new(&ExperimentConfig::default().outdir)).ok();
    }

    #[test]
    fn steady_state_responds_to_param_overrides() {
        let over = CliOverrides {
            params: vec!["c=0.546".into()],
            outdir: Some(tmp_outdir("ss-c")),
            ..Default::default()
        };
        let cfg = config::resolve(CommandKind::SteadyState, &over).unwrap();
        let out = cmd_steady_state(cfg).unwrap();
        assert!(out.steady_state.theta < 0.767);
        assert!(out.max_residual < 1e-10);
    }

    #[test]
    fn oracle_calibrated_command_round_trips() {
        let mut cfg = ExperimentConfig::default_for(CommandKind::Calibrated { oracle: true });
        cfg.outdir = tmp_outdir("oracle");
        let out = cmd_calibrated(cfg, true).unwrap();
        assert!(out.summary.oracle);
        assert!((out.summary.mean_theta - 0.767).abs() / 0.767 < 0.05);
        // trace files exist with the documented schema
        let trace_path = out.dir.join("seed_0").join("trace.csv");
        let text = std::fs::read_to_string(trace_path).unwrap();
        assert!(text.starts_with("k,theta,phi,eval_l,eval_v,eval_reward,ratio"));
    }

    #[test]
    fn verify_command_writes_report() {
        let mut cfg = ExperimentConfig::default_for(CommandKind::Verify);
        cfg.outdir = tmp_outdir("verify");
        let report_path = PathBuf::from(tmp_outdir("verify-report")).join("report.json");
        let out = cmd_verify(cfg, Some(report_path.clone())).unwrap();
        assert!(out.report.all_passed);
        assert_eq!(out.report_path, report_path);
        let text = std::fs::read_to_string(&report_path).unwrap();
        let parsed: VerifyReport = serde_json::from_str(&text).unwrap();
        assert!(parsed.all_passed);
    }
}
