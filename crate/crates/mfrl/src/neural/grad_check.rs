//! Finite-difference verification of the hand-written backward pass.

use super::Mlp;
use crate::error::{Error, Result};

/// Scalar objectives the checker can differentiate analytically.
#[derive(Debug, Clone)]
pub enum LossSpec {
    /// `L = sum_i w_i * y_i`
    Linear { weights: Vec<f64> },
    /// `L = 0.5 * sum_i (y_i - t_i)^2`
    Quadratic { target: Vec<f64> },
}

impl LossSpec {
    pub fn loss(&self, y: &[f64]) -> f64 {
        match self {
            LossSpec::Linear { weights } => y.iter().zip(weights).map(|(a, b)| a * b).sum(),
            LossSpec::Quadratic { target } => {
                0.5 * y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
        }
    }

    pub fn upstream(&self, y: &[f64]) -> Vec<f64> {
        match self {
            LossSpec::Linear { weights } => weights.clone(),
            LossSpec::Quadratic { target } => y.iter().zip(target).map(|(a, b)| a - b).collect(),
        }
    }
}

const MAX_CHECK_WIDTH: usize = 32;

/// Compares analytic parameter gradients against central finite differences
/// (step `fd_step`, canonically 1e-5) on every weight and bias, and returns
/// the maximum relative error.
///
/// Probes whose perturbation flips a ReLU activation pattern are skipped:
/// finite differences straddling a kink measure nothing the subgradient
/// convention is accountable for.
pub fn gradient_check(net: &Mlp, x: &[f64], loss: &LossSpec, fd_step: f64) -> Result<f64> {
    for &w in &net.layer_sizes[1..net.layer_sizes.len() - 1] {
        if w > MAX_CHECK_WIDTH {
            return Err(Error::domain(format!(
                "gradient_check expects hidden widths of at most {MAX_CHECK_WIDTH}, got {w}"
            )));
        }
    }
    let (y, cache) = net.forward(x)?;
    let upstream = loss.upstream(&y);
    let (analytic, _) = net.backward(&cache, &upstream)?;

    let mut probe = net.clone();
    let mut max_rel = 0.0f64;

    let n_layers = net.weights.len();
    for layer in 0..n_layers {
        for idx in 0..net.weights[layer].data.len() + net.biases[layer].len() {
            let (is_bias, slot) = if idx < net.weights[layer].data.len() {
                (false, idx)
            } else {
                (true, idx - net.weights[layer].data.len())
            };
            let original = if is_bias {
                probe.biases[layer][slot]
            } else {
                probe.weights[layer].data[slot]
            };
            let write = |p: &mut Mlp, v: f64| {
                if is_bias {
                    p.biases[layer][slot] = v;
                } else {
                    p.weights[layer].data[slot] = v;
                }
            };

            write(&mut probe, original + fd_step);
            let (y_hi, cache_hi) = probe.forward(x)?;
            write(&mut probe, original - fd_step);
            let (y_lo, cache_lo) = probe.forward(x)?;
            write(&mut probe, original);

            if cache_hi.activation_pattern() != cache_lo.activation_pattern() {
                continue; // perturbation crosses a ReLU kink
            }

            let fd = (loss.loss(&y_hi) - loss.loss(&y_lo)) / (2.0 * fd_step);
            let exact = if is_bias {
                analytic.biases[layer][slot]
            } else {
                analytic.weights[layer].data[slot]
            };
            let rel = (exact - fd).abs() / exact.abs().max(fd.abs()).max(1e-6);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}
