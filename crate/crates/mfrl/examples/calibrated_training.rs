//! The full correction with a learned best response: the agent trains under
//! a frozen field with the effective vacancy cost, the population simulation
//! re-aggregates tightness, and the damped iteration walks to the
//! equilibrium.
//!
//! A small demonstration configuration (narrow networks, few episodes per
//! iteration, capped outer loop); the published setup runs via
//! `mfrl calibrated`.
//!
//! ```bash
//! cargo run --release --example calibrated_training
//! ```

use mfrl::ddpg::DdpgConfig;
use mfrl::econ::ModelParams;
use mfrl::env::{EnvConfig, EnvKind, DEFAULT_V_MAX};
use mfrl::equilibrium::solve_steady_state;
use mfrl::mf_loop::{compute_c_eff, run_calibrated_mfrl, MfConfig};

fn main() -> mfrl::Result<()> {
    let p = ModelParams::default();
    let s = solve_steady_state(&p)?;
    let c_eff = compute_c_eff(&p)?;

    let ddpg = DdpgConfig {
        hidden_width: 64,
        episodes: 25,
        gamma: 0.9995,
        ..DdpgConfig::default()
    };
    let mf = MfConfig {
        omega: 0.05,            // the learned aggregate map is stiff; step small
        max_step_halvings: 0,   // trial steps would retrain, take them as-is
        max_iterations: 10,
        ..MfConfig::default()
    };
    let env_template = EnvConfig {
        kind: EnvKind::MeanField,
        theta_fixed: Some(mf.theta0),
        cost: c_eff,
        b: s.b,
        v_max: DEFAULT_V_MAX,
        horizon: 200,
        l_init_range: (0.5, 0.99),
        theta_clamp: (0.01, 10.0),
    };

    println!("calibrated mean-field training from theta = {} (effective cost {:.4}):", mf.theta0, c_eff);
    let trace = run_calibrated_mfrl(&mf, &env_template, &p, &ddpg, 1, |k, _agent| {
        println!("  trained iteration {k}");
        Ok(())
    })?;
    for k in 0..trace.iterations() {
        println!(
            "  theta^({k}) = {:.4} -> aggregate {:.4}{}",
            trace.theta_history[k],
            trace.phi_history[k],
            if trace.degenerate[k] { " (degenerate, clamped)" } else { "" }
        );
    }
    println!(
        "final theta = {:.4} (theoretical {:.4}), converged = {}",
        trace.final_theta(),
        s.theta,
        trace.converged
    );
    Ok(())
}
