//! Verify the hand-written backward pass against central finite differences
//! on actor- and critic-shaped networks.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use mfrl::neural::{gradient_check, LossSpec, Mlp, OutputActivation};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> mfrl::Result<()> {
    let mut rng = StdRng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let (sizes, act, label) = if i % 2 == 0 {
            (vec![2usize, 16, 16, 1], OutputActivation::Tanh, "actor-shaped")
        } else {
            (vec![3usize, 16, 16, 1], OutputActivation::Identity, "critic-shaped")
        };
        let net = Mlp::new(&sizes, act, None, &mut rng)?;
        let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = if i % 3 == 0 {
            LossSpec::Quadratic { target: vec![0.25] }
        } else {
            LossSpec::Linear { weights: vec![1.0] }
        };
        let err = gradient_check(&net, &x, &loss, 1e-5)?;
        println!("net {i:2} ({label:13}): max relative error {err:.3e}");
        worst = worst.max(err);
    }
    println!("worst over 10 networks: {worst:.3e} (tolerance 1e-4)");
    Ok(())
}
