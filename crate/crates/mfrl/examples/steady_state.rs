//! Solve the theoretical steady state of the labor market and poke at its
//! comparative statics.
//!
//! ```bash
//! cargo run --release --example steady_state
//! ```

use mfrl::econ::ModelParams;
use mfrl::equilibrium::{solve_steady_state, steady_state_residuals};

fn main() -> mfrl::Result<()> {
    let params = ModelParams::default();
    let s = solve_steady_state(&params)?;

    println!("steady state under the default calibration:");
    println!("  employment        l     = {:.6}", s.l);
    println!("  unemployment      u     = {:.6}", s.u);
    println!("  fill probability  q     = {:.6}", s.q);
    println!("  wage              w     = {:.6}", s.w);
    println!("  vacancies         v     = {:.6}", s.v);
    println!("  tightness         theta = {:.6}", s.theta);
    println!("  benefit           b     = {:.6}", s.b);

    let residuals = steady_state_residuals(&s, &params)?;
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("  max |equation residual| = {max:.3e}");

    // vacancies get more expensive: firms post less, the market loosens
    let mut pricey = params;
    pricey.vacancy_cost *= 2.0;
    let tight = solve_steady_state(&pricey)?;
    println!();
    println!(
        "doubling the vacancy cost moves tightness {:.4} -> {:.4} and employment {:.4} -> {:.4}",
        s.theta, tight.theta, s.l, tight.l
    );
    Ok(())
}
