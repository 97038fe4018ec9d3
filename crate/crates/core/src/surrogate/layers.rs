use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Dense layer; `weights` is `n_out × n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self { n_in, n_out, activation, weights: vec![0.0; n_in * n_out], biases: vec![0.0; n_out] }
    }

    /// He-uniform for ReLU layers, Glorot-uniform for linear ones; zero
    /// biases.
    pub fn init(n_in: usize, n_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / n_in.max(1) as f64).sqrt(),
            Activation::Linear => (6.0 / (n_in + n_out).max(1) as f64).sqrt(),
        };
        let mut l = Self::zeros(n_in, n_out, activation);
        for w in &mut l.weights {
            *w = rng.gen_range(-limit..=limit);
        }
        l
    }

    pub(super) fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        if self.n_in == 0 {
            return self.biases.clone();
        }
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    pub(super) fn activate(&self, z: &[f64]) -> Vec<f64> {
        match self.activation {
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            Activation::Linear => z.to_vec(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activate(&self.pre_activation(x))
    }

    /// Given the layer input, its pre-activation and dL/d(output), adds the
    /// parameter gradients to `grad` and returns dL/d(input).
    pub(super) fn backward(&self, x: &[f64], z: &[f64], dy: &[f64], grad: &mut Layer) -> Vec<f64> {
        let dz: Vec<f64> = match self.activation {
            Activation::Relu => dy.iter().zip(z).map(|(&d, &v)| if v > 0.0 { d } else { 0.0 }).collect(),
            Activation::Linear => dy.to_vec(),
        };
        let mut dx = vec![0.0; self.n_in];
        for (o, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.biases[o] += d;
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let grow = &mut grad.weights[o * self.n_in..(o + 1) * self.n_in];
            for i in 0..self.n_in {
                grow[i] += d * x[i];
                dx[i] += d * row[i];
            }
        }
        dx
    }
}

/// Per-layer inputs and pre-activations of one forward pass.
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Feed-forward layer stack without normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stack {
    pub layers: Vec<Layer>,
}

impl Stack {
    /// `sizes = [n_in, h1, ..., n_out]`; hidden layers use `hidden`,
    /// the last layer `last`.
    pub fn init(sizes: &[usize], hidden: Activation, last: Activation, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "a stack needs input and output widths");
        let n = sizes.len() - 1;
        let layers =
            (0..n).map(|i| Layer::init(sizes[i], sizes[i + 1], if i + 1 == n { last } else { hidden }, rng)).collect();
        Self { layers }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("non-empty stack").n_out
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.layers.iter().fold(x.to_vec(), |a, l| l.forward(&a))
    }

    pub fn forward_trace(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        let mut trace =
            Trace { inputs: Vec::with_capacity(self.layers.len()), pre: Vec::with_capacity(self.layers.len()) };
        let mut a = x.to_vec();
        for l in &self.layers {
            let z = l.pre_activation(&a);
            let next = l.activate(&z);
            trace.inputs.push(a);
            trace.pre.push(z);
            a = next;
        }
        (a, trace)
    }

    pub fn backward(&self, trace: &Trace, dy: &[f64], grad: &mut Stack) -> Vec<f64> {
        let mut d = dy.to_vec();
        for (i, l) in self.layers.iter().enumerate().rev() {
            d = l.backward(&trace.inputs[i], &trace.pre[i], &d, &mut grad.layers[i]);
        }
        d
    }

    pub fn zeroed(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out, l.activation)).collect() }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}
