use std::time::Instant;

use mfrl::ddpg::{train, DdpgAgent, DdpgConfig, ReplayBuffer};
use mfrl::econ::ModelParams;
use mfrl::env::{Env, EnvConfig, EnvKind, DEFAULT_V_MAX};
use mfrl::equilibrium::{self, ValueMode};
use mfrl::mf_loop::{self, MfConfig};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() {
    let p = ModelParams::default();
    let s = equilibrium::solve_steady_state(&p).unwrap();
    let c_eff = mf_loop::compute_c_eff(&p).unwrap();
    println!("theta* = {:.6}  b* = {:.6}  c_eff = {:.6}", s.theta, s.b, c_eff);

    let env_tpl = EnvConfig {
        kind: EnvKind::MeanField,
        theta_fixed: Some(0.5),
        cost: c_eff,
        b: s.b,
        v_max: DEFAULT_V_MAX,
        horizon: 200,
        l_init_range: (0.5, 0.99),
        theta_clamp: (0.01, 10.0),
    };

    // oracle trace
    let mf = MfConfig::default();
    let t0 = Instant::now();
    let trace = mf_loop::run_oracle_mfrl(&mf, &env_tpl, &p, ValueMode::AverageReward).unwrap();
    println!(
        "oracle c_eff: {} iterations in {:?}, converged={}, final theta={:.5}",
        trace.iterations(),
        t0.elapsed(),
        trace.converged,
        trace.final_theta()
    );
    println!(
        "  theta history: {:?}",
        trace.theta_history.iter().map(|t| (t * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    println!("  omegas: {:?}", trace.effective_omegas);
    let (ratios, l_hat) = mf_loop::contraction_ratios(&trace).unwrap();
    println!("  L_hat = {:?} over {} ratios", l_hat, ratios.len());

    let mut env_c = env_tpl;
    env_c.cost = p.vacancy_cost;
    let trace_c = mf_loop::run_oracle_mfrl(&mf, &env_c, &p, ValueMode::AverageReward).unwrap();
    println!(
        "oracle raw c: {} iterations, converged={}, final theta={:.5}",
        trace_c.iterations(),
        trace_c.converged,
        trace_c.final_theta()
    );

    // time one DDPG training iteration at a couple of widths
    for width in [256usize, 128, 64] {
        let cfg = DdpgConfig { hidden_width: width, episodes: 5, ..DdpgConfig::default() };
        let mut rng = StdRng::seed_from_u64(1);
        let mut agent = DdpgAgent::new(&cfg, &mut rng).unwrap();
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, 2);
        let mut env = Env::new(env_tpl, p).unwrap();
        let t0 = Instant::now();
        train(&mut agent, &mut env, &mut buffer, cfg.episodes, &cfg, &mut rng).unwrap();
        let dt = t0.elapsed();
        println!(
            "width {width}: 5 episodes (1000 steps) in {:?} -> 50 episodes ~ {:.1}s",
            dt,
            dt.as_secs_f64() * 10.0
        );
    }
}
