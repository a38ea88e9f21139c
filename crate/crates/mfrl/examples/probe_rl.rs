use std::time::Instant;
use mfrl::ddpg::{train, DdpgAgent, DdpgConfig, ReplayBuffer};
use mfrl::econ::ModelParams;
use mfrl::env::{Env, EnvConfig, EnvKind, DEFAULT_V_MAX};
use mfrl::equilibrium;
use mfrl::mf_loop::{self, MfConfig};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn arg<T: std::str::FromStr>(n: usize, default: T) -> T {
    std::env::args().nth(n).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let p = ModelParams::default();
    let s = equilibrium::solve_steady_state(&p).unwrap();
    let c_eff = mf_loop::compute_c_eff(&p).unwrap();
    let which: String = std::env::args().nth(1).unwrap_or_else(|| "naive".into());
    let width: usize = arg(2, 256);
    let seed: u64 = arg(3, 1);
    let gamma: f64 = arg(4, 0.99);
    let omega: f64 = arg(5, 0.05);
    let theta_max: f64 = arg(6, 10.0);
    let episodes: usize = arg(7, 50);
    let baseline: f64 = arg(8, 0.0);
    let warm: u64 = arg(9, 1);

    if which == "naive" {
        let cfg = DdpgConfig { hidden_width: width, gamma, episodes, ..DdpgConfig::default() };
        let env_cfg = EnvConfig {
            kind: EnvKind::Naive,
            theta_fixed: None,
            cost: p.vacancy_cost,
            b: s.b,
            v_max: DEFAULT_V_MAX,
            horizon: 200,
            l_init_range: (0.5, 0.99),
            theta_clamp: (0.01, theta_max),
        };
        let mut rng = StdRng::seed_from_u64(seed);
        let mut agent = DdpgAgent::new(&cfg, &mut rng).unwrap();
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, seed ^ 0xabcd);
        let mut env = Env::new(env_cfg, p).unwrap();
        let t0 = Instant::now();
        let stats = train(&mut agent, &mut env, &mut buffer, episodes, &cfg, &mut rng).unwrap();
        println!("naive seed {seed} width {width} gamma {gamma} in {:?}", t0.elapsed());
        for e in stats.episodes.iter().step_by(5) {
            println!("  ep {:2}: mean_r={:.4} eval_theta={:.4} eval_l={:.4}", e.episode, e.mean_reward, e.eval_theta, e.eval_l);
        }
        let f = stats.final_eval;
        println!("  final: theta={:.4} l={:.4} v={:.5} reward={:.4} (oracle 0.0996 / 0.2649)", f.theta, f.l, f.v, f.reward);
    } else {
        let mf = MfConfig { omega, max_step_halvings: 0, warm_start: warm == 1, ..MfConfig::default() };
        let ddpg = DdpgConfig { hidden_width: width, gamma, episodes, reward_baseline: baseline, ..DdpgConfig::default() };
        let env_tpl = EnvConfig {
            kind: EnvKind::MeanField,
            theta_fixed: Some(mf.theta0),
            cost: if which == "structural" { p.vacancy_cost } else { c_eff },
            b: s.b,
            v_max: DEFAULT_V_MAX,
            horizon: 200,
            l_init_range: (0.5, 0.99),
            theta_clamp: (0.01, theta_max),
        };
        let t0 = Instant::now();
        let trace = mf_loop::run_calibrated_mfrl(&mf, &env_tpl, &p, &ddpg, seed, |_, _| Ok(())).unwrap();
        println!("{which} seed {seed} width {width} gamma {gamma} omega {omega} tmax {theta_max} ep {episodes} base {baseline}: {} iters in {:?}, converged={}",
            trace.iterations(), t0.elapsed(), trace.converged);
        for k in 0..trace.iterations() {
            println!("  k={k}: theta={:.4} phi={:.4} l={:.4} degen={}",
                trace.theta_history[k], trace.phi_history[k], trace.policy_stats[k].eval_l, trace.degenerate[k]);
        }
        println!("  final theta = {:.5} (target 0.767)", trace.final_theta());
    }
}
