use std::time::Instant;
use mfrl::ddpg::{train, DdpgAgent, DdpgConfig, ReplayBuffer};
use mfrl::econ::ModelParams;
use mfrl::env::{Env, EnvConfig, EnvKind, DEFAULT_V_MAX};

fn main() {
    let p = ModelParams::default();
    let env_tpl = EnvConfig {
        kind: EnvKind::MeanField,
        theta_fixed: Some(0.5),
        cost: 0.4626,
        b: 0.4985,
        v_max: DEFAULT_V_MAX,
        horizon: 200,
        l_init_range: (0.5, 0.99),
        theta_clamp: (0.01, 10.0),
    };
    for width in [256usize, 128] {
        let cfg = DdpgConfig { hidden_width: width, ..DdpgConfig::default() };
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let mut agent = DdpgAgent::new(&cfg, &mut rng).unwrap();
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, 2);
        let mut env = Env::new(env_tpl, p).unwrap();
        // fill warmup with 5 episodes first
        train(&mut agent, &mut env, &mut buffer, 5, &cfg, &mut rng).unwrap();
        let t0 = Instant::now();
        train(&mut agent, &mut env, &mut buffer, 5, &cfg, &mut rng).unwrap();
        let per_step = t0.elapsed().as_secs_f64() / 1000.0;
        println!("width {width}: {:.2} ms/step -> 50-episode iteration ~ {:.0}s, full calibrated run (~12 iter x 5 seeds) ~ {:.0} min",
            per_step * 1e3, per_step * 10_000.0, per_step * 10_000.0 * 12.0 * 5.0 / 60.0);
    }
}
