//! Adam with bias correction, moments shaped like the network parameters.

use serde::{Deserialize, Serialize};

use super::{Gradients, Matrix, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<Matrix>,
    pub second_moment: Vec<Matrix>,
    pub first_moment_bias: Vec<Vec<f64>>,
    pub second_moment_bias: Vec<Vec<f64>>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self {
            first_moment: net.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect(),
            second_moment: net.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect(),
            first_moment_bias: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            second_moment_bias: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    fn matches(&self, net: &Mlp) -> bool {
        self.first_moment.len() == net.weights.len()
            && self
                .first_moment
                .iter()
                .zip(&net.weights)
                .all(|(m, w)| m.rows == w.rows && m.cols == w.cols)
            && self
                .first_moment_bias
                .iter()
                .zip(&net.biases)
                .all(|(m, b)| m.len() == b.len())
    }
}

#[inline]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One Adam update. Zero gradients leave the parameters exactly in place
/// (zero moments stay zero) while still advancing the step count.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, st: &mut AdamState) -> Result<()> {
    if !st.matches(net) {
        return Err(Error::Shape("optimizer state does not match network shape".into()));
    }
    if grads.weights.len() != net.weights.len()
        || grads
            .weights
            .iter()
            .zip(&net.weights)
            .any(|(g, w)| g.rows != w.rows || g.cols != w.cols)
    {
        return Err(Error::Shape("gradient shape does not match network shape".into()));
    }

    st.step_count += 1;
    let bc1 = 1.0 - st.beta1.powi(st.step_count as i32);
    let bc2 = 1.0 - st.beta2.powi(st.step_count as i32);

    for layer in 0..net.weights.len() {
        update_slice(
            &mut net.weights[layer].data,
            &grads.weights[layer].data,
            &mut st.first_moment[layer].data,
            &mut st.second_moment[layer].data,
            st.learning_rate,
            st.beta1,
            st.beta2,
            st.epsilon,
            bc1,
            bc2,
        );
        update_slice(
            &mut net.biases[layer],
            &grads.biases[layer],
            &mut st.first_moment_bias[layer],
            &mut st.second_moment_bias[layer],
            st.learning_rate,
            st.beta1,
            st.beta2,
            st.epsilon,
            bc1,
            bc2,
        );
    }
    net.bump_revision();
    Ok(())
}
