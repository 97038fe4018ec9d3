use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Activation, Layer, Stack, Trace};
use super::norm::Standardizer;
use super::SurrogateError;

/// Network body operating in normalized units.
pub trait Core: Clone + Send + Sync {
    fn n_in(&self) -> usize;
    fn n_out(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    /// Forward pass, then adds the parameter gradient for output gradient
    /// `dy(prediction)` into `grad`. Returns the prediction.
    fn accumulate(&self, x: &[f64], grad: &mut Self, dy: impl FnOnce(&[f64]) -> Vec<f64>) -> Vec<f64>;
    fn zeroed(&self) -> Self;
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
}

impl Core for Stack {
    fn n_in(&self) -> usize {
        Stack::n_in(self)
    }

    fn n_out(&self) -> usize {
        Stack::n_out(self)
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        Stack::forward(self, x)
    }

    fn accumulate(&self, x: &[f64], grad: &mut Self, dy: impl FnOnce(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let (y, trace) = self.forward_trace(x);
        self.backward(&trace, &dy(&y), grad);
        y
    }

    fn zeroed(&self) -> Self {
        Stack::zeroed(self)
    }

    fn params(&self) -> Vec<&[f64]> {
        Stack::params(self)
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        Stack::params_mut(self)
    }
}

/// Chain of chunks along the signal path plus a single linear head.
///
/// Chunk `i` reads `[s_i, latent_{i-1}]` (chunk 0 reads `s_0` only) and
/// emits a ReLU latent of width `latent`. The head reads
/// `[latent_last, x_R]`; with no chunks it reads `x_R` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cci {
    pub chunk_inputs: Vec<usize>,
    pub n_residual: usize,
    pub latent: usize,
    pub chunks: Vec<Stack>,
    pub head: Layer,
}

impl Cci {
    pub fn init(
        chunk_inputs: &[usize],
        n_residual: usize,
        latent: usize,
        chunk_hidden: &[usize],
        n_out: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chunks = chunk_inputs
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut sizes = vec![w + if i > 0 { latent } else { 0 }];
                sizes.extend_from_slice(chunk_hidden);
                sizes.push(latent);
                Stack::init(&sizes, Activation::Relu, Activation::Relu, &mut rng)
            })
            .collect();
        let head_in = if chunk_inputs.is_empty() { 0 } else { latent } + n_residual;
        let head = Layer::init(head_in, n_out, Activation::Linear, &mut rng);
        Self { chunk_inputs: chunk_inputs.to_vec(), n_residual, latent, chunks, head }
    }

    fn split<'a>(&self, x: &'a [f64]) -> (Vec<&'a [f64]>, &'a [f64]) {
        let mut parts = Vec::with_capacity(self.chunk_inputs.len());
        let mut at = 0;
        for &w in &self.chunk_inputs {
            parts.push(&x[at..at + w]);
            at += w;
        }
        (parts, &x[at..])
    }
}

impl Core for Cci {
    fn n_in(&self) -> usize {
        self.chunk_inputs.iter().sum::<usize>() + self.n_residual
    }

    fn n_out(&self) -> usize {
        self.head.n_out
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (parts, x_r) = self.split(x);
        let mut latent: Vec<f64> = Vec::new();
        for (chunk, s) in self.chunks.iter().zip(parts) {
            let mut input = s.to_vec();
            input.extend_from_slice(&latent);
            latent = chunk.forward(&input);
        }
        latent.extend_from_slice(x_r);
        self.head.forward(&latent)
    }

    fn accumulate(&self, x: &[f64], grad: &mut Self, dy: impl FnOnce(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let (parts, x_r) = self.split(x);
        let mut traces: Vec<Trace> = Vec::with_capacity(self.chunks.len());
        let mut latent: Vec<f64> = Vec::new();
        for (chunk, s) in self.chunks.iter().zip(&parts) {
            let mut input = s.to_vec();
            input.extend_from_slice(&latent);
            let (out, trace) = chunk.forward_trace(&input);
            traces.push(trace);
            latent = out;
        }
        let n_latent = latent.len();
        latent.extend_from_slice(x_r);
        let z = self.head.pre_activation(&latent);
        let y = self.head.activate(&z);
        let d_head_in = self.head.backward(&latent, &z, &dy(&y), &mut grad.head);

        let mut d_latent = d_head_in[..n_latent].to_vec();
        for (i, chunk) in self.chunks.iter().enumerate().rev() {
            let d_in = chunk.backward(&traces[i], &d_latent, &mut grad.chunks[i]);
            d_latent = d_in[self.chunk_inputs[i]..].to_vec();
        }
        y
    }

    fn zeroed(&self) -> Self {
        Self {
            chunks: self.chunks.iter().map(Stack::zeroed).collect(),
            head: Layer::zeros(self.head.n_in, self.head.n_out, self.head.activation),
            ..self.clone()
        }
    }

    fn params(&self) -> Vec<&[f64]> {
        let mut p: Vec<&[f64]> = self.chunks.iter().flat_map(|c| c.params()).collect();
        p.push(&self.head.weights);
        p.push(&self.head.biases);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p: Vec<&mut [f64]> = self.chunks.iter_mut().flat_map(|c| c.params_mut()).collect();
        p.push(&mut self.head.weights);
        p.push(&mut self.head.biases);
        p
    }
}

/// A core with input and output normalization; predictions are in
/// physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate<C> {
    pub input_norm: Standardizer,
    pub output_norm: Standardizer,
    pub core: C,
}

/// Fully connected model.
pub type Mlp = Surrogate<Stack>;
pub type CciModel = Surrogate<Cci>;

impl Mlp {
    /// ReLU hidden layers of the given widths and a linear output layer.
    pub fn new(input_norm: Standardizer, output_norm: Standardizer, hidden: &[usize], seed: u64) -> Self {
        let mut sizes = vec![input_norm.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(output_norm.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let core = Stack::init(&sizes, Activation::Relu, Activation::Linear, &mut rng);
        Self { input_norm, output_norm, core }
    }
}

impl<C: Core> Surrogate<C> {
    pub fn n_in(&self) -> usize {
        self.core.n_in()
    }

    pub fn n_out(&self) -> usize {
        self.core.n_out()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        if x.len() != self.n_in() {
            return Err(SurrogateError::Dimension { expected: self.n_in(), found: x.len() });
        }
        Ok(self.output_norm.invert(&self.core.forward(&self.input_norm.apply(x))))
    }

    /// Mean absolute error over every output of every sample, measured in
    /// normalized output units, and its gradient. The subgradient of |e| at
    /// 0 is taken as 0.
    pub fn backward(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> (f64, C) {
        assert!(!batch.is_empty(), "empty batch");
        let owned: Vec<(Vec<f64>, Vec<f64>)> =
            batch.iter().map(|(x, y)| (self.input_norm.apply(x), self.output_norm.apply(y))).collect();
        let pairs: Vec<(&[f64], &[f64])> = owned.iter().map(|(x, y)| (x.as_slice(), y.as_slice())).collect();
        mae_gradient(&self.core, &pairs)
    }
}

/// MAE and its gradient over already-normalized pairs.
pub fn mae_gradient<C: Core>(core: &C, pairs: &[(&[f64], &[f64])]) -> (f64, C) {
    let mut grad = core.zeroed();
    let scale = 1.0 / (pairs.len() * core.n_out()) as f64;
    let mut total = 0.0;
    for (x, y) in pairs {
        core.accumulate(x, &mut grad, |p| {
            p.iter()
                .zip(y.iter())
                .map(|(a, b)| {
                    let e = a - b;
                    total += e.abs();
                    scale
                        * if e > 0.0 {
                            1.0
                        } else if e < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                })
                .collect()
        });
    }
    (total * scale, grad)
}
