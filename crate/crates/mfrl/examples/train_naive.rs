//! Train the learner in the closed-loop environment, where its own posting
//! moves market tightness. Watch it discover the market-manipulation
//! optimum far below the competitive equilibrium.
//!
//! A short demonstration configuration; the full published setup runs via
//! `mfrl naive`.
//!
//! ```bash
//! cargo run --release --example train_naive
//! ```

use mfrl::ddpg::{train, DdpgAgent, DdpgConfig, ReplayBuffer};
use mfrl::econ::ModelParams;
use mfrl::env::{Env, EnvConfig, EnvKind, DEFAULT_V_MAX};
use mfrl::equilibrium::{monopsony_steady_state, solve_steady_state};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> mfrl::Result<()> {
    let p = ModelParams::default();
    let s = solve_steady_state(&p)?;
    let oracle = monopsony_steady_state(s.b, &p)?;

    // narrower networks than the published configuration, for a quick demo
    let cfg = DdpgConfig { hidden_width: 64, episodes: 30, ..DdpgConfig::default() };
    let env_cfg = EnvConfig {
        kind: EnvKind::Naive,
        theta_fixed: None,
        cost: p.vacancy_cost,
        b: s.b,
        v_max: DEFAULT_V_MAX,
        horizon: 200,
        l_init_range: (0.5, 0.99),
        theta_clamp: (0.01, 10.0),
    };

    let mut rng = StdRng::seed_from_u64(1);
    let mut agent = DdpgAgent::new(&cfg, &mut rng)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, 99);
    let mut env = Env::new(env_cfg, p)?;

    println!("training {} episodes in the closed-loop environment...", cfg.episodes);
    let stats = train(&mut agent, &mut env, &mut buffer, cfg.episodes, &cfg, &mut rng)?;
    for e in stats.episodes.iter().step_by(5) {
        println!(
            "  episode {:2}: mean reward {:+.4}, greedy theta {:.4}",
            e.episode, e.mean_reward, e.eval_theta
        );
    }
    let f = stats.final_eval;
    println!();
    println!("greedy policy:       theta = {:.4}, steady profit = {:.4}", f.theta, f.reward);
    println!("manipulation oracle: theta = {:.4}, steady profit = {:.4}", oracle.theta, oracle.steady_profit);
    println!("competitive value:   theta = {:.4}", s.theta);
    Ok(())
}
