//! The learning-free verification suite: every deterministic claim the
//! artifact rests on, run end to end and reported as machine-readable
//! pass/fail results.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::ddpg::{DdpgAgent, DdpgConfig, ReplayBuffer, Transition};
use crate::econ::{self, ModelParams};
use crate::env::{Env, EnvConfig, EnvKind, DEFAULT_V_MAX};
use crate::equilibrium::{
    best_response_vi, monopsony_steady_state, solve_steady_state, steady_state_residuals,
    ValueMode,
};
use crate::error::Result;
use crate::mf_loop::{
    compute_c_eff, contraction_ratios, run_oracle_mfrl, update_theta, MfConfig,
};
use crate::neural::{adam_step, gradient_check, polyak_update, AdamState, LossSpec, Mlp, OutputActivation};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Observations that are reported without a pass/fail judgment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfoResult {
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub info: Vec<InfoResult>,
    pub all_passed: bool,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, detail }
}

fn mean_field_template(cost: f64, b: f64) -> EnvConfig {
    EnvConfig {
        kind: EnvKind::MeanField,
        theta_fixed: Some(0.5),
        cost,
        b,
        v_max: DEFAULT_V_MAX,
        horizon: 200,
        l_init_range: (0.5, 0.99),
        theta_clamp: (0.01, 10.0),
    }
}

/// Runs the full deterministic suite under the given calibration.
pub fn run_verification(p: &ModelParams) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut info = Vec::new();

    // solved once; nearly every later check is relative to it
    let s = solve_steady_state(p)?;
    let c_eff = compute_c_eff(p)?;

    // 1. steady state reproduces the published equilibrium
    {
        let res = steady_state_residuals(&s, p)?;
        let max_res = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let table2 = [
            ("l", s.l, 0.967),
            ("u", s.u, 0.033),
            ("q", s.q, 0.552),
            ("w", s.w, 0.831),
            ("v", s.v, 0.025),
            ("theta", s.theta, 0.767),
        ];
        let within = table2.iter().all(|(_, got, want)| (got - want).abs() < 1e-3);
        checks.push(check(
            "steady_state_reproduction",
            within && max_res < 1e-10,
            format!(
                "theta={:.6}, l={:.6}, max residual={:.2e} (each published value within 1e-3)",
                s.theta, s.l, max_res
            ),
        ));
    }

    // 2. effective-cost arithmetic is exact
    {
        let expected = (0.0244 / 0.0144) * 0.273;
        let same_calibration = (p.vacancy_cost - 0.273).abs() < 1e-12
            && (p.interest_rate - 0.01).abs() < 1e-12
            && (p.lambda - 0.0144).abs() < 1e-12;
        let relative = if same_calibration { (c_eff / expected - 1.0).abs() } else { 0.0 };
        let inverse = (c_eff * p.lambda / (p.interest_rate + p.lambda) - p.vacancy_cost).abs();
        checks.push(check(
            "effective_cost_exactness",
            relative < 1e-12 && inverse < 1e-12,
            format!("c_eff={c_eff:.15}, relative error {relative:.2e}, inverse identity {inverse:.2e}"),
        ));
    }

    // 3. backward pass agrees with finite differences
    {
        let mut rng = StdRng::seed_from_u64(1000);
        let mut worst = 0.0f64;
        for i in 0..10 {
            let (sizes, act) = if i % 2 == 0 {
                (vec![2usize, 16, 16, 1], OutputActivation::Tanh)
            } else {
                (vec![3usize, 16, 16, 1], OutputActivation::Identity)
            };
            let net = Mlp::new(&sizes, act, None, &mut rng)?;
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let loss = if i % 3 == 0 {
                LossSpec::Quadratic { target: vec![0.25] }
            } else {
                LossSpec::Linear { weights: vec![1.0] }
            };
            worst = worst.max(gradient_check(&net, &x, &loss, 1e-5)?);
        }
        checks.push(check(
            "gradient_correctness",
            worst < 1e-4,
            format!("max relative error {worst:.2e} over 10 networks"),
        ));
    }

    // 4. parametric bias oracle: average-reward FOC under both costs
    {
        let pt = best_response_vi(s.theta, c_eff, s.b, ValueMode::AverageReward, p)?;
        let (l_eff, _) = pt.stationary_employment(p)?;
        let pt_raw = best_response_vi(s.theta, p.vacancy_cost, s.b, ValueMode::AverageReward, p)?;
        let (l_raw, _) = pt_raw.stationary_employment(p)?;
        checks.push(check(
            "parametric_bias_oracle",
            (l_eff - s.l).abs() < 0.01 && l_raw > s.l,
            format!(
                "stationary l: {l_eff:.4} with effective cost (target {:.4}), {l_raw:.4} with raw cost (must exceed it)",
                s.l
            ),
        ));
    }

    // 5. structural bias oracle: the market-moving optimum sits far below
    {
        let m = monopsony_steady_state(s.b, p)?;
        checks.push(check(
            "structural_bias_oracle",
            m.theta < 0.5 * s.theta,
            format!(
                "monopsony theta={:.6} vs equilibrium {:.6} (v={:.6}, profit={:.6})",
                m.theta, s.theta, m.v, m.steady_profit
            ),
        ));
    }

    // 6. oracle field iteration: convergence, direction under the raw cost,
    //    and an empirical contraction factor below one
    {
        let mf = MfConfig::default();
        let trace = run_oracle_mfrl(&mf, &mean_field_template(c_eff, s.b), p, ValueMode::AverageReward)?;
        let theta = trace.final_theta();
        let within = (theta - s.theta).abs() / s.theta < 0.05;
        let (_, l_hat) = contraction_ratios(&trace)?;
        let l_hat_ok = l_hat.map(|l| l < 1.0).unwrap_or(false);

        let trace_raw =
            run_oracle_mfrl(&mf, &mean_field_template(p.vacancy_cost, s.b), p, ValueMode::AverageReward)?;
        let above = trace_raw.final_theta() > s.theta;

        checks.push(check(
            "oracle_fixed_point",
            trace.converged && within && trace.iterations() <= 20 && l_hat_ok && above,
            format!(
                "effective cost: theta={theta:.5} in {} iterations (L_hat={:.3}); raw cost: theta={:.5} (must exceed {:.5})",
                trace.iterations(),
                l_hat.unwrap_or(f64::NAN),
                trace_raw.final_theta(),
                s.theta
            ),
        ));
    }

    // 7. closed-form model properties
    {
        let mut rng = StdRng::seed_from_u64(2000);
        let mut ok = true;
        let mut detail = String::new();
        // concavity
        for _ in 0..200 {
            let l1 = rng.gen_range(0.01..1.0);
            let l2 = rng.gen_range(0.01..1.0);
            let t = rng.gen_range(0.01..0.99);
            let mix = econ::production(t * l1 + (1.0 - t) * l2, p)?;
            let hull = t * econ::production(l1, p)? + (1.0 - t) * econ::production(l2, p)?;
            if mix < hull - 1e-12 {
                ok = false;
                detail = format!("concavity violated at ({l1}, {l2}, {t})");
                break;
            }
        }
        // fill-rate monotonicity on the unclamped region
        if ok {
            let start = p.match_efficiency.powf(1.0 / p.phi) + 1e-9;
            let mut prev = econ::fill_probability(start, p)?;
            let mut theta = start;
            for _ in 0..100 {
                theta *= 1.05;
                let q = econ::fill_probability(theta, p)?;
                if q >= prev {
                    ok = false;
                    detail = format!("fill probability not decreasing at theta={theta}");
                    break;
                }
                prev = q;
            }
        }
        // analytical derivatives vs central differences
        if ok {
            let h = 1e-6;
            for _ in 0..100 {
                let l = rng.gen_range(0.1..=1.0);
                let fd_f = (econ::production(l + h, p)? - econ::production(l - h, p)?) / (2.0 * h);
                let an_f = econ::marginal_product(l, p)?;
                let fd_w = (econ::wage(l + h, 0.9, 0.5, p)? - econ::wage(l - h, 0.9, 0.5, p)?) / (2.0 * h);
                let an_w = econ::wage_derivative_l(l, p)?;
                if (fd_f - an_f).abs() / an_f.abs() > 1e-6 || (fd_w - an_w).abs() / an_w.abs() > 1e-6 {
                    ok = false;
                    detail = format!("derivative mismatch at l={l}");
                    break;
                }
            }
        }
        // the solved state is a fixed point of the flow law
        if ok {
            let next = econ::transition(s.l, s.v, s.theta, p)?;
            if (next - s.l).abs() > 2e-3 {
                ok = false;
                detail = format!("transition fixed point off by {}", (next - s.l).abs());
            }
        }
        // cost-difference identity of the flow profit
        if ok {
            for _ in 0..100 {
                let l = rng.gen_range(0.1..1.0);
                let v = rng.gen_range(0.0..DEFAULT_V_MAX);
                let theta = rng.gen_range(0.05..3.0);
                let hi = econ::flow_profit(l, v, theta, s.b, c_eff, p)?;
                let lo = econ::flow_profit(l, v, theta, s.b, p.vacancy_cost, p)?;
                if (hi - lo + (c_eff - p.vacancy_cost) * v).abs() > 1e-14 {
                    ok = false;
                    detail = format!("cost-difference identity violated at v={v}");
                    break;
                }
            }
        }
        if ok {
            detail = "concavity, fill-rate monotonicity, derivative agreement, flow fixed point, cost identity".into();
        }
        checks.push(check("model_properties", ok, detail));
    }

    // 8. replay buffer: FIFO eviction and uniform sampling
    {
        let mut buf = ReplayBuffer::new(5, 1);
        let tr = |r: f64| Transition {
            obs: [0.9, 0.1],
            action: 0.0,
            reward: r,
            next_obs: [0.9, 0.1],
            done: false,
        };
        for i in 0..7 {
            buf.store(tr(i as f64));
        }
        let fifo_ok = buf.len() == 5 && buf.front().unwrap().reward == 2.0;

        let mut buf = ReplayBuffer::new(100, 2);
        for i in 0..100 {
            buf.store(tr(i as f64));
        }
        let draws = 1_000_000usize;
        let mut counts = vec![0u32; 100];
        for _ in 0..draws / 200 {
            for t in buf.sample(200)? {
                counts[t.reward as usize] += 1;
            }
        }
        let sigma = ((draws as f64) * 0.01 * 0.99).sqrt();
        let uniform_ok = counts.iter().all(|&c| (c as f64 - 10_000.0).abs() < 5.0 * sigma);
        checks.push(check(
            "replay_buffer_properties",
            fifo_ok && uniform_ok,
            format!(
                "FIFO eviction ok={fifo_ok}; sample frequencies within five sigma of uniform={uniform_ok}"
            ),
        ));
    }

    // 9. network training primitives
    {
        let mut rng = StdRng::seed_from_u64(3000);
        let online = Mlp::actor(2, 16, &mut rng)?;
        let mut target = Mlp::actor(2, 16, &mut rng)?;
        let gap = |t: &Mlp| -> f64 {
            t.weights
                .iter()
                .zip(&online.weights)
                .flat_map(|(a, b)| a.data.iter().zip(&b.data))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let g0 = gap(&target);
        polyak_update(&mut target, &online, 0.005)?;
        let polyak_ok = (gap(&target) / g0 - 0.995).abs() < 1e-9;

        let mut net = Mlp::critic(3, 16, &mut rng)?;
        let frozen = net.clone();
        let mut st = AdamState::new(&net, 1e-3);
        let zeros = net.zero_gradients();
        adam_step(&mut net, &zeros, &mut st)?;
        let adam_ok = net.weights == frozen.weights && st.step_count == 1;

        let probe = Mlp::actor(2, 16, &mut StdRng::seed_from_u64(4000))?;
        let mut tanh_ok = true;
        let mut rr = StdRng::seed_from_u64(4001);
        for _ in 0..100 {
            let (y, _) = probe.forward(&[rr.gen_range(-3.0..3.0), rr.gen_range(-3.0..3.0)])?;
            tanh_ok &= y[0].abs() < 1.0;
        }
        let a = Mlp::actor(2, 16, &mut StdRng::seed_from_u64(5000))?;
        let b = Mlp::actor(2, 16, &mut StdRng::seed_from_u64(5000))?;
        let deterministic_ok = a == b;
        checks.push(check(
            "network_properties",
            polyak_ok && adam_ok && tanh_ok && deterministic_ok,
            format!("polyak ratio ok={polyak_ok}, adam zero-grad fixed point={adam_ok}, tanh bounded={tanh_ok}, seeded construction deterministic={deterministic_ok}"),
        ));
    }

    // 10. environment contracts
    {
        let mut mf_env = Env::new(
            EnvConfig { theta_fixed: Some(0.767), ..mean_field_template(c_eff, s.b) },
            *p,
        )?;
        mf_env.reset_to(0.9);
        let low = mf_env.step(-0.5)?;
        mf_env.reset_to(0.9);
        let high = mf_env.step(0.5)?;
        let taker_ok = low.theta == 0.767 && high.theta == 0.767;

        let naive_cfg = EnvConfig { kind: EnvKind::Naive, theta_fixed: None, cost: p.vacancy_cost, ..mean_field_template(p.vacancy_cost, s.b) };
        let mut nv = Env::new(naive_cfg, *p)?;
        nv.reset_to(0.9);
        let a_lo = nv.step(-0.5)?;
        nv.reset_to(0.9);
        let a_hi = nv.step(0.5)?;
        let manipulation_ok = a_hi.theta > a_lo.theta;

        let roll = |seed: u64| -> Result<Vec<f64>> {
            let mut env = Env::new(naive_cfg, *p)?;
            let mut rng = StdRng::seed_from_u64(seed);
            env.reset(&mut rng);
            (0..200).map(|i| Ok(env.step((i as f64 * 0.01).sin())?.reward)).collect()
        };
        let determinism_ok = roll(9)? == roll(9)?;
        checks.push(check(
            "environment_contracts",
            taker_ok && manipulation_ok && determinism_ok,
            format!("tightness-taker={taker_ok}, manipulation channel={manipulation_ok}, trajectory determinism={determinism_ok}"),
        ));
    }

    // 11. damping preserves fixed points
    {
        let mut ok = true;
        for omega in [0.05, 0.25, 0.5, 0.75, 1.0] {
            for theta in [0.1, 0.767, 2.0] {
                ok &= (update_theta(theta, theta, omega) - theta).abs() < 1e-15;
            }
        }
        checks.push(check("damping_fixed_point_preservation", ok, "update(theta, theta, omega) == theta".into()));
    }

    // 12. the field loop is a pure function of its configuration
    {
        let mf = MfConfig { max_iterations: 5, consecutive: 99, ..MfConfig::default() };
        let tpl = mean_field_template(c_eff, s.b);
        let a = run_oracle_mfrl(&mf, &tpl, p, ValueMode::AverageReward)?;
        let b = run_oracle_mfrl(&mf, &tpl, p, ValueMode::AverageReward)?;
        let ok = a.theta_history == b.theta_history && a.phi_history == b.phi_history;
        checks.push(check("loop_purity", ok, "two five-iteration oracle runs are bit-identical".into()));
    }

    // 13. a learning step leaves the targets on the Polyak path
    {
        let cfg = DdpgConfig {
            hidden_width: 16,
            batch_size: 32,
            warmup_steps: 32,
            buffer_capacity: 256,
            ..DdpgConfig::default()
        };
        let mut rng = StdRng::seed_from_u64(6000);
        let mut agent = DdpgAgent::new(&cfg, &mut rng)?;
        let mut buf = ReplayBuffer::new(cfg.buffer_capacity, 3);
        for i in 0..64 {
            buf.store(Transition {
                obs: [0.8, 0.2],
                action: 0.1,
                reward: 0.1 * (i % 5) as f64,
                next_obs: [0.79, 0.21],
                done: i % 11 == 0,
            });
        }
        let before = agent.critic_target.clone();
        agent.update(&mut buf, &cfg)?;
        let mut ok = true;
        for ((wt, wo), w0) in agent
            .critic_target
            .weights
            .iter()
            .zip(&agent.critic.weights)
            .zip(&before.weights)
        {
            for ((t, o), z) in wt.data.iter().zip(&wo.data).zip(&w0.data) {
                ok &= (t - (cfg.tau * o + (1.0 - cfg.tau) * z)).abs() < 1e-15;
            }
        }
        checks.push(check(
            "target_update_bound",
            ok,
            "targets moved exactly tau of the way to the online networks".into(),
        ));
    }

    // reported, not asserted: the discounting tension between the two oracle
    // optimality criteria
    {
        let disc = best_response_vi(s.theta, p.vacancy_cost, s.b, ValueMode::Discounted, p)?;
        let (l_disc, _) = disc.stationary_employment(p)?;
        let avg = best_response_vi(s.theta, p.vacancy_cost, s.b, ValueMode::AverageReward, p)?;
        let (l_avg, _) = avg.stationary_employment(p)?;
        info.push(InfoResult {
            name: "discounted_vs_average_discrepancy".into(),
            detail: format!(
                "at the raw cost and equilibrium tightness, the exactly-discounted best response \
                 settles at l={l_disc:.4} (the hiring-cost factor emerges from discounting) while \
                 the average-reward best response settles at l={l_avg:.4}; the effective-cost \
                 correction targets the latter regime"
            ),
        });
    }

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, info, all_passed })
}
