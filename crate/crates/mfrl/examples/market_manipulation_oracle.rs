//! The structural bias, demonstrated without learning: a firm whose posting
//! moves market tightness maximizes steady profit by starving the market of
//! vacancies, depressing wages. The grid-search oracle pins the exact
//! optimum a closed-loop learner gravitates toward.
//!
//! ```bash
//! cargo run --release --example market_manipulation_oracle
//! ```

use mfrl::econ::ModelParams;
use mfrl::equilibrium::{consistent_state_for_v, monopsony_steady_state, solve_steady_state};

fn main() -> mfrl::Result<()> {
    let p = ModelParams::default();
    let s = solve_steady_state(&p)?;
    let m = monopsony_steady_state(s.b, &p)?;

    println!("competitive equilibrium:  theta = {:.4}, v = {:.5}, l = {:.4}", s.theta, s.v, s.l);
    println!("market-moving optimum:    theta = {:.4}, v = {:.5}, l = {:.4}", m.theta, m.v, m.l);
    println!("profit at the optimum:    {:.6}", m.steady_profit);

    // what the competitive posting level would earn a market mover
    let (l_comp, _, theta_comp) = consistent_state_for_v(s.v, &p)?;
    let profit_comp = mfrl::econ::flow_profit(l_comp, s.v, theta_comp, s.b, p.vacancy_cost, &p)?;
    println!("profit posting v* anyway: {:.6}", profit_comp);
    println!();
    println!(
        "restricting vacancies {:.0}% below the equilibrium level gains {:.2}% steady profit",
        (1.0 - m.v / s.v) * 100.0,
        (m.steady_profit / profit_comp - 1.0) * 100.0
    );
    Ok(())
}
