//! Small dense networks with exact reverse-mode gradients, written by hand.
//! Two instantiations matter: an actor head bounded by tanh and an unbounded
//! critic head. Batched paths are GEMM-backed so training at batch 256 stays
//! cheap; single-sample paths serve action selection and gradient checking.

mod adam;
mod grad_check;

pub use adam::{adam_step, AdamState};
pub use grad_check::{gradient_check, LossSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// `c = alpha * op(a) * op(b) + beta * c`; transposition is free via strides.
fn gemm(alpha: f64, a: &Matrix, a_t: bool, b: &Matrix, b_t: bool, beta: f64, c: &mut Matrix) {
    let (m, k_a) = if a_t { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (k_b, n) = if b_t { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k_a, k_b, "gemm inner dimensions disagree");
    assert_eq!((c.rows, c.cols), (m, n), "gemm output shape disagrees");
    let (rsa, csa) = if a_t { (1, a.cols as isize) } else { (a.cols as isize, 1) };
    let (rsb, csb) = if b_t { (1, b.cols as isize) } else { (b.cols as isize, 1) };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k_a,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// Head nonlinearity; hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Tanh,
    Identity,
}

/// Feedforward network: affine layers with ReLU between them and the chosen
/// head activation. Weight matrices are `[fan_out x fan_in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub output_activation: OutputActivation,
    /// Bumped on every parameter mutation; lets backward reject stale caches.
    #[serde(skip)]
    revision: u64,
}

/// Parameter-shaped gradient bundle.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations saved by a single-sample forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// Post-ReLU activations per hidden layer.
    hidden: Vec<Vec<f64>>,
    output: Vec<f64>,
    revision: u64,
}

impl ForwardCache {
    /// True where each hidden unit was active; used by the kink-avoiding
    /// probes of the gradient checker.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.hidden.iter().flat_map(|a| a.iter().map(|&x| x > 0.0)).collect()
    }
}

/// Activations saved by a batched forward pass (one row per sample).
#[derive(Debug, Clone)]
pub struct BatchCache {
    input: Matrix,
    hidden: Vec<Matrix>,
    output: Matrix,
    revision: u64,
}

impl Mlp {
    /// Fresh network with uniform `±1/sqrt(fan_in)` weights; the final layer
    /// is drawn from `±final_layer_scale` when given, which keeps initial
    /// head outputs near zero.
    pub fn new<R: Rng>(
        layer_sizes: &[usize],
        output_activation: OutputActivation,
        final_layer_scale: Option<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Shape("network needs at least input and output widths".into()));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Shape("zero-width layer".into()));
        }
        let n_layers = layer_sizes.len() - 1;
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for layer in 0..n_layers {
            let fan_in = layer_sizes[layer];
            let fan_out = layer_sizes[layer + 1];
            let bound = if layer == n_layers - 1 {
                final_layer_scale.unwrap_or(1.0 / (fan_in as f64).sqrt())
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            let mut w = Matrix::zeros(fan_out, fan_in);
            for x in w.data.iter_mut() {
                *x = rng.gen_range(-bound..=bound);
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            output_activation,
            revision: 0,
        })
    }

    /// Actor configuration: bounded head, tiny final-layer initialization.
    pub fn actor<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Self::new(&[input, hidden, hidden, 1], OutputActivation::Tanh, Some(3e-3), rng)
    }

    /// Critic configuration: state-action input, unbounded scalar output.
    pub fn critic<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Self::new(&[input, hidden, hidden, 1], OutputActivation::Identity, Some(3e-3), rng)
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.data.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub(crate) fn bump_revision(&mut self) {
        self.revision = self.revision.wrapping_add(1);
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn same_architecture(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes && self.output_activation == other.output_activation
    }

    /// Single-sample forward pass; the cache carries everything backward
    /// needs for exact gradients.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "input width {} does not match network input {}",
                x.len(),
                self.input_width()
            )));
        }
        let n_layers = self.weights.len();
        let mut hidden = Vec::with_capacity(n_layers - 1);
        let mut act = x.to_vec();
        for layer in 0..n_layers {
            let w = &self.weights[layer];
            let b = &self.biases[layer];
            let mut z = b.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let wrow = w.row(o);
                let mut acc = 0.0;
                for (wi, ai) in wrow.iter().zip(&act) {
                    acc += wi * ai;
                }
                *zo += acc;
            }
            if layer < n_layers - 1 {
                for v in z.iter_mut() {
                    *v = v.max(0.0); // ReLU, subgradient 0 at exactly zero
                }
                hidden.push(z.clone());
                act = z;
            } else {
                if self.output_activation == OutputActivation::Tanh {
                    for v in z.iter_mut() {
                        *v = v.tanh();
                    }
                }
                let cache = ForwardCache {
                    input: x.to_vec(),
                    hidden,
                    output: z.clone(),
                    revision: self.revision,
                };
                return Ok((z, cache));
            }
        }
        unreachable!("layer loop always returns at the head")
    }

    /// Gradients of a scalar objective with respect to every parameter, given
    /// `upstream = dL/d(output)`. Also returns the gradient with respect to
    /// the input, which the policy update needs.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if cache.revision != self.revision {
            return Err(Error::Shape("stale forward cache: parameters changed since the pass".into()));
        }
        if upstream.len() != self.output_width() {
            return Err(Error::Shape("upstream gradient width mismatch".into()));
        }
        let n_layers = self.weights.len();
        let mut grads = self.zero_gradients();

        // head
        let mut delta: Vec<f64> = match self.output_activation {
            OutputActivation::Tanh => upstream
                .iter()
                .zip(&cache.output)
                .map(|(g, y)| g * (1.0 - y * y))
                .collect(),
            OutputActivation::Identity => upstream.to_vec(),
        };

        for layer in (0..n_layers).rev() {
            let below: &[f64] = if layer == 0 { &cache.input } else { &cache.hidden[layer - 1] };
            {
                let gw = &mut grads.weights[layer];
                for (o, d) in delta.iter().enumerate() {
                    let gr = gw.row_mut(o);
                    for (g, a) in gr.iter_mut().zip(below) {
                        *g += d * a;
                    }
                }
                for (g, d) in grads.biases[layer].iter_mut().zip(&delta) {
                    *g += d;
                }
            }
            // propagate to the layer below
            let w = &self.weights[layer];
            let mut next = vec![0.0f64; w.cols];
            for (o, d) in delta.iter().enumerate() {
                let wrow = w.row(o);
                for (n, wi) in next.iter_mut().zip(wrow) {
                    *n += d * wi;
                }
            }
            if layer > 0 {
                for (n, a) in next.iter_mut().zip(&cache.hidden[layer - 1]) {
                    if *a <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            delta = next;
        }
        Ok((grads, delta))
    }

    /// Batched forward pass: `x` is `[batch x input]`.
    pub fn batch_forward(&self, x: &Matrix) -> Result<(Matrix, BatchCache)> {
        if x.cols != self.input_width() {
            return Err(Error::Shape(format!(
                "batch input width {} does not match network input {}",
                x.cols,
                self.input_width()
            )));
        }
        let n_layers = self.weights.len();
        let batch = x.rows;
        let mut hidden = Vec::with_capacity(n_layers - 1);
        let mut act = x.clone();
        for layer in 0..n_layers {
            let w = &self.weights[layer];
            let b = &self.biases[layer];
            let mut z = Matrix::zeros(batch, w.rows);
            for i in 0..batch {
                z.row_mut(i).copy_from_slice(b);
            }
            gemm(1.0, &act, false, w, true, 1.0, &mut z);
            if layer < n_layers - 1 {
                for v in z.data.iter_mut() {
                    *v = v.max(0.0);
                }
                hidden.push(z.clone());
                act = z;
            } else {
                if self.output_activation == OutputActivation::Tanh {
                    for v in z.data.iter_mut() {
                        *v = v.tanh();
                    }
                }
                let cache = BatchCache {
                    input: x.clone(),
                    hidden,
                    output: z.clone(),
                    revision: self.revision,
                };
                return Ok((z, cache));
            }
        }
        unreachable!("layer loop always returns at the head")
    }

    /// Batched backward pass. Parameter gradients accumulate over the batch;
    /// the input gradient (needed when the critic feeds the actor update) is
    /// only materialized on request.
    pub fn batch_backward(
        &self,
        cache: &BatchCache,
        upstream: &Matrix,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<Gradients>, Option<Matrix>)> {
        if cache.revision != self.revision {
            return Err(Error::Shape("stale forward cache: parameters changed since the pass".into()));
        }
        if upstream.rows != cache.input.rows || upstream.cols != self.output_width() {
            return Err(Error::Shape("upstream gradient shape mismatch".into()));
        }
        let n_layers = self.weights.len();
        let mut grads = want_params.then(|| self.zero_gradients());

        let mut delta = match self.output_activation {
            OutputActivation::Tanh => {
                let mut d = upstream.clone();
                for (v, y) in d.data.iter_mut().zip(&cache.output.data) {
                    *v *= 1.0 - y * y;
                }
                d
            }
            OutputActivation::Identity => upstream.clone(),
        };

        for layer in (0..n_layers).rev() {
            if layer == 0 && !want_input && grads.is_none() {
                break;
            }
            let below: &Matrix = if layer == 0 { &cache.input } else { &cache.hidden[layer - 1] };
            if let Some(g) = grads.as_mut() {
                gemm(1.0, &delta, true, below, false, 1.0, &mut g.weights[layer]);
                let gb = &mut g.biases[layer];
                for i in 0..delta.rows {
                    for (acc, d) in gb.iter_mut().zip(delta.row(i)) {
                        *acc += d;
                    }
                }
            }
            if layer == 0 && !want_input {
                break;
            }
            let w = &self.weights[layer];
            let mut next = Matrix::zeros(delta.rows, w.cols);
            gemm(1.0, &delta, false, w, false, 0.0, &mut next);
            if layer > 0 {
                for (n, a) in next.data.iter_mut().zip(&cache.hidden[layer - 1].data) {
                    if *a <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            delta = next;
        }
        Ok((grads, want_input.then_some(delta)))
    }
}

/// Soft target tracking: `target <- tau * online + (1 - tau) * target`.
pub fn polyak_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::Shape("polyak update across different architectures".into()));
    }
    for (tw, ow) in target.weights.iter_mut().zip(&online.weights) {
        for (t, o) in tw.data.iter_mut().zip(&ow.data) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    for (tb, ob) in target.biases.iter_mut().zip(&online.biases) {
        for (t, o) in tb.iter_mut().zip(ob) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    target.bump_revision();
    Ok(())
}
