//! The cost-discounting mismatch, demonstrated with deterministic dynamic
//! programming instead of learning: a steady-flow optimizer facing the raw
//! per-period vacancy cost over-hires, and the effective-cost correction
//! restores the equilibrium employment level. An exactly-discounted
//! optimizer needs no correction at all, which is the whole tension.
//!
//! ```bash
//! cargo run --release --example parametric_bias_oracle
//! ```

use mfrl::econ::{self, ModelParams};
use mfrl::equilibrium::{best_response_vi, solve_steady_state, ValueMode};
use mfrl::mf_loop::compute_c_eff;

fn main() -> mfrl::Result<()> {
    let p = ModelParams::default();
    let s = solve_steady_state(&p)?;
    let c_eff = compute_c_eff(&p)?;
    println!("raw cost c = {:.4}, effective cost = {:.6}", p.vacancy_cost, c_eff);

    // the job-creation condition at the equilibrium state, under the
    // economic numerator (r + lambda) and the per-period one (lambda)
    let economic = econ::job_creation_residual(s.l, s.theta, s.b, p.interest_rate + p.lambda, &p)?;
    let naive = econ::job_creation_residual(s.l, s.theta, s.b, p.lambda, &p)?;
    println!("job-creation residual at the steady state:");
    println!("  (r + lambda) numerator: {economic:+.6}  (zero: the equilibrium condition)");
    println!("  lambda numerator:       {naive:+.6}  (positive: hiring looks too cheap)");
    println!();

    for (label, cost) in [("raw cost", p.vacancy_cost), ("effective cost", c_eff)] {
        let pt = best_response_vi(s.theta, cost, s.b, ValueMode::AverageReward, &p)?;
        let (l_inf, v_inf) = pt.stationary_employment(&p)?;
        println!(
            "steady-flow best response at theta* with {label}: stationary l = {l_inf:.4}, v = {v_inf:.5} (target l* = {:.4})",
            s.l
        );
    }

    let pt = best_response_vi(s.theta, p.vacancy_cost, s.b, ValueMode::Discounted, &p)?;
    let (l_disc, _) = pt.stationary_employment(&p)?;
    println!(
        "exactly-discounted best response at theta* with the raw cost: stationary l = {l_disc:.4}"
    );
    println!("(the capitalized hiring cost emerges from discounting by itself there)");
    Ok(())
}
