//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
//! the deterministic criteria run in seconds, the three learning criteria
//! train five seeds each and dominate the runtime.

use std::time::Instant;

use mfrl::econ::ModelParams;
use mfrl::equilibrium::{
    best_response_vi, monopsony_steady_state, solve_steady_state, ValueMode,
};
use mfrl::experiments::{self, AblationKind, CommandKind, ExperimentConfig};
use mfrl::mf_loop::{compute_c_eff, contraction_ratios, run_oracle_mfrl, MfConfig};
use mfrl::neural::{gradient_check, LossSpec, Mlp, OutputActivation};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Published steady state, three-decimal rounding.
const TABLE_L: f64 = 0.967;
const TABLE_U: f64 = 0.033;
const TABLE_Q: f64 = 0.552;
const TABLE_W: f64 = 0.831;
const TABLE_V: f64 = 0.025;
const TABLE_THETA: f64 = 0.767;

/// Market-moving oracle tightness under the default calibration, recorded
/// from the deterministic grid search; the naive learner's reference target.
const MONOPSONY_THETA: f64 = 0.099584;

fn criterion(n: usize, desc: &str, passed: bool, detail: &str) {
    println!("ACCEPTANCE {n:02} [{}] {desc}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "acceptance criterion {n} failed: {detail}");
}

fn temp_outdir(tag: &str) -> String {
    std::env::temp_dir()
        .join(format!("mfrl-acceptance-{tag}-{}", std::process::id()))
        .to_string_lossy()
        .into_owned()
}

#[test]
fn criterion_01_steady_state_reproduction() {
    let mut cfg = ExperimentConfig::default_for(CommandKind::SteadyState);
    cfg.outdir = temp_outdir("c1");
    let t0 = Instant::now();
    let out = experiments::cmd_steady_state(cfg).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let s = out.steady_state;
    let within = (s.l - TABLE_L).abs() < 1e-3
        && (s.u - TABLE_U).abs() < 1e-3
        && (s.q - TABLE_Q).abs() < 1e-3
        && (s.w - TABLE_W).abs() < 1e-3
        && (s.v - TABLE_V).abs() < 1e-3
        && (s.theta - TABLE_THETA).abs() < 1e-3;
    criterion(
        1,
        "steady-state reproduction",
        within && out.max_residual < 1e-10 && elapsed < 1.0,
        &format!(
            "theta={:.6} l={:.6} u={:.6} q={:.6} w={:.6} v={:.6}, max residual {:.2e}, {elapsed:.3}s",
            s.theta, s.l, s.u, s.q, s.w, s.v, out.max_residual
        ),
    );
}

#[test]
fn criterion_02_calibration_exactness() {
    let p = ModelParams::default();
    let c_eff = compute_c_eff(&p).unwrap();
    let expected = (0.0244 / 0.0144) * 0.273;
    let rel = (c_eff / expected - 1.0).abs();
    criterion(
        2,
        "effective-cost exactness",
        rel < 1e-12,
        &format!("c_eff={c_eff:.15}, relative error {rel:.2e}"),
    );
}

#[test]
fn criterion_03_gradient_correctness() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(7777);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let (sizes, act) = if i % 2 == 0 {
            (vec![2usize, 16, 16, 1], OutputActivation::Tanh)
        } else {
            (vec![3usize, 16, 16, 1], OutputActivation::Identity)
        };
        let net = Mlp::new(&sizes, act, None, &mut rng).unwrap();
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = if i % 3 == 0 {
            LossSpec::Quadratic { target: vec![0.5] }
        } else {
            LossSpec::Linear { weights: vec![1.0] }
        };
        worst = worst.max(gradient_check(&net, &x, &loss, 1e-5).unwrap());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    criterion(
        3,
        "gradient correctness",
        worst < 1e-4 && elapsed < 10.0,
        &format!("max relative error {worst:.2e} over 10 networks, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_04_parametric_bias_oracle() {
    let p = ModelParams::default();
    let s = solve_steady_state(&p).unwrap();
    let c_eff = compute_c_eff(&p).unwrap();
    let t0 = Instant::now();
    let pt_eff = best_response_vi(TABLE_THETA, c_eff, s.b, ValueMode::AverageReward, &p).unwrap();
    let (l_eff, _) = pt_eff.stationary_employment(&p).unwrap();
    let pt_raw =
        best_response_vi(TABLE_THETA, p.vacancy_cost, s.b, ValueMode::AverageReward, &p).unwrap();
    let (l_raw, _) = pt_raw.stationary_employment(&p).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    criterion(
        4,
        "parametric bias oracle",
        (l_eff - TABLE_L).abs() < 0.01 && l_raw > TABLE_L && elapsed < 60.0,
        &format!(
            "stationary l {l_eff:.4} with effective cost (within 0.01 of {TABLE_L}), {l_raw:.4} with raw cost (strictly above), {elapsed:.2}s"
        ),
    );
}

#[test]
fn criterion_05_structural_bias_oracle() {
    let p = ModelParams::default();
    let s = solve_steady_state(&p).unwrap();
    let t0 = Instant::now();
    let m = monopsony_steady_state(s.b, &p).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    criterion(
        5,
        "structural bias oracle",
        m.theta < 0.5 * s.theta && (m.theta - MONOPSONY_THETA).abs() < 1e-6 && elapsed < 10.0,
        &format!(
            "market-moving theta {:.6} (recorded {MONOPSONY_THETA}), below half of {:.6}, {elapsed:.2}s",
            m.theta, s.theta
        ),
    );
}

#[test]
fn criterion_06_oracle_fixed_point() {
    let p = ModelParams::default();
    let s = solve_steady_state(&p).unwrap();
    let c_eff = compute_c_eff(&p).unwrap();
    let t0 = Instant::now();

    // literal configuration: omega = 0.5, theta0 = 0.3, average-reward mode
    let mf = MfConfig { omega: 0.5, theta0: 0.3, ..MfConfig::default() };
    let mut cfg = ExperimentConfig::default_for(CommandKind::Calibrated { oracle: true });
    let tpl = mfrl::env::EnvConfig {
        kind: mfrl::env::EnvKind::MeanField,
        theta_fixed: Some(mf.theta0),
        cost: c_eff,
        b: s.b,
        v_max: cfg.env.v_max,
        horizon: cfg.env.horizon,
        l_init_range: cfg.env.l_init_range,
        theta_clamp: cfg.env.theta_clamp,
    };
    let trace = run_oracle_mfrl(&mf, &tpl, &p, ValueMode::AverageReward).unwrap();
    let theta = trace.final_theta();
    let (_, l_hat) = contraction_ratios(&trace).unwrap();
    let l_hat = l_hat.unwrap_or(f64::NAN);

    cfg.env.cost = experiments::CostKind::C;
    let mut tpl_raw = tpl;
    tpl_raw.cost = p.vacancy_cost;
    let trace_raw = run_oracle_mfrl(&mf, &tpl_raw, &p, ValueMode::AverageReward).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();

    criterion(
        6,
        "oracle fixed point",
        trace.converged
            && trace.iterations() <= 20
            && (theta - TABLE_THETA).abs() / TABLE_THETA < 0.05
            && l_hat < 1.0
            && trace_raw.final_theta() > TABLE_THETA
            && elapsed < 300.0,
        &format!(
            "effective cost: theta {theta:.5} in {} iterations, L_hat {l_hat:.3}; raw cost: theta {:.5} (strictly above {TABLE_THETA}); {elapsed:.1}s",
            trace.iterations(),
            trace_raw.final_theta()
        ),
    );
}

/// Shared experiment profile for the learning criteria. Hidden width 128
/// instead of the published 256 keeps the suite a single-core afternoon
/// rather than a day; everything else follows the command defaults.
fn rl_config(command: CommandKind, tag: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_for(command);
    cfg.ddpg.hidden_width = 128;
    cfg.mf.checkpoints = false;
    cfg.outdir = temp_outdir(tag);
    cfg
}

/// Criteria 7-9 share the trained runs, so they execute as one test and
/// print their verdict lines in order.
#[test]
fn criteria_07_08_09_stochastic_learning_runs() {
    let p = ModelParams::default();
    let s = solve_steady_state(&p).unwrap();

    // 7: uncorrected training lands far below the equilibrium
    let naive = experiments::cmd_naive(rl_config(CommandKind::Naive, "c7")).unwrap();
    let naive_mean = naive.summary.mean_theta;
    criterion(
        7,
        "naive training diverges to the manipulation side",
        naive_mean < 0.3,
        &format!(
            "mean theta {naive_mean:.4} over {} seeds (market-moving oracle {:.4}, equilibrium {:.4})",
            naive.summary.per_seed.len(),
            naive.summary.monopsony_theta,
            s.theta
        ),
    );

    // 8: the fully corrected loop recovers the equilibrium
    let calibrated =
        experiments::cmd_calibrated(rl_config(CommandKind::Calibrated { oracle: false }, "c8"), false)
            .unwrap();
    let cal_mean = calibrated.summary.mean_theta;
    let cal_std = calibrated.summary.std_theta.unwrap_or(0.0);
    criterion(
        8,
        "calibrated mean-field training recovers the equilibrium",
        (cal_mean - TABLE_THETA).abs() / TABLE_THETA < 0.15,
        &format!(
            "mean theta {cal_mean:.4} +- {cal_std:.4} over {} seeds (within 15% of {TABLE_THETA})",
            calibrated.summary.per_seed.len()
        ),
    );

    // 9: each single correction fails in its own direction, and only the
    // fully corrected run brackets the equilibrium
    let structural = experiments::cmd_ablation(
        rl_config(CommandKind::AblationStructural, "c9s"),
        AblationKind::StructuralOnly,
    )
    .unwrap();
    let parametric = experiments::cmd_ablation(
        rl_config(CommandKind::AblationParametric, "c9p"),
        AblationKind::ParametricOnly,
    )
    .unwrap();
    let (st_mean, st_std) = match &structural {
        experiments::AblationOutput::Structural(o) => {
            (o.summary.mean_theta, o.summary.std_theta.unwrap_or(0.0))
        }
        _ => unreachable!(),
    };
    let (pa_mean, pa_std) = match &parametric {
        experiments::AblationOutput::Parametric(o) => {
            (o.summary.mean_theta, o.summary.std_theta.unwrap_or(0.0))
        }
        _ => unreachable!(),
    };
    let brackets =
        |mean: f64, std: f64| (mean - std) <= TABLE_THETA && TABLE_THETA <= (mean + std);
    let only_calibrated_brackets = brackets(cal_mean, cal_std)
        && !brackets(st_mean, st_std)
        && !brackets(pa_mean, pa_std);
    criterion(
        9,
        "ablation directions",
        st_mean > TABLE_THETA && pa_mean < TABLE_THETA && only_calibrated_brackets,
        &format!(
            "structural-only {st_mean:.4} +- {st_std:.4} (above {TABLE_THETA}), parametric-only {pa_mean:.4} +- {pa_std:.4} (below); calibrated interval {:.4}..{:.4} brackets it, ablations do not",
            cal_mean - cal_std,
            cal_mean + cal_std
        ),
    );
}

#[test]
fn criterion_10_property_suites() {
    let mut cfg = ExperimentConfig::default_for(CommandKind::Verify);
    cfg.outdir = temp_outdir("c10");
    let out = experiments::cmd_verify(cfg, None).unwrap();
    let names: Vec<&str> = out.report.checks.iter().map(|c| c.name.as_str()).collect();
    let discrepancy_reported = out
        .report
        .info
        .iter()
        .any(|i| i.name == "discounted_vs_average_discrepancy");
    criterion(
        10,
        "property suites via verify",
        out.report.all_passed && discrepancy_reported,
        &format!(
            "{} checks passed ({}); discounting discrepancy reported, not asserted",
            out.report.checks.len(),
            names.join(", ")
        ),
    );
}
