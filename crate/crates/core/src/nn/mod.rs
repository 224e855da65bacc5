//! Dense feed-forward networks: forward pass, backpropagation, the Nadam
//! optimizer, exact constructions and architecture sizing.
//!
//! A layer computes `g(W·x + θ)`: the threshold `θ` is *added* to the
//! weighted sum. Weights are stored row-major, one row per neuron.

mod build;
mod nadam;
mod sizing;

pub use build::{
    build_hybrid_net, build_hyperplane_net, build_quadric_net, build_relu_net,
    build_subspace_net, build_variety_net, init_default, init_weights, InitScheme,
    DEFAULT_LEAKY_SLOPE, INTERVAL_LAYER_WIDTH,
};
pub use nadam::{nadam_step, NadamConfig, NadamState};
pub use sizing::{ah_count, binomial, deep_width_ok, deep_width_ok3};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    /// `x ↦ x^d`, `d ≥ 2`.
    Power(u32),
    /// Slope applied to negative inputs, in `(0, 1)`.
    LeakyRelu(f64),
    Sigmoid,
    /// Output layer only.
    Softmax,
    /// 1 for strictly positive input, else 0. Zero derivative everywhere.
    Step,
}

impl Activation {
    fn validate(&self) -> Result<()> {
        match *self {
            Activation::Power(d) if d < 2 => Err(Error::arg("power activation needs d >= 2")),
            Activation::LeakyRelu(s) if !(s > 0.0 && s < 1.0) => {
                Err(Error::arg(format!("leaky relu slope {s} outside (0,1)")))
            }
            _ => Ok(()),
        }
    }

    /// Elementwise activation; softmax acts on the whole slice.
    fn apply(&self, z: &[f64], out: &mut [f64]) {
        match *self {
            Activation::Identity => out.copy_from_slice(z),
            Activation::Power(d) => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = x.powi(d as i32);
                }
            }
            Activation::LeakyRelu(s) => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = if x > 0.0 { x } else { s * x };
                }
            }
            Activation::Sigmoid => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = sigmoid(x);
                }
            }
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = (x - max).exp();
                    sum += *o;
                }
                out.iter_mut().for_each(|o| *o /= sum);
            }
            Activation::Step => {
                for (o, &x) in out.iter_mut().zip(z) {
                    *o = if x > 0.0 { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// `g'(z)` given pre-activation `z` and output `a = g(z)`. Not defined for softmax.
    fn derivative(&self, z: f64, a: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Power(d) => d as f64 * z.powi(d as i32 - 1),
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Step => 0.0,
            Activation::Softmax => unreachable!("softmax is only used with categorical cross-entropy"),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Tags as written in model files: `identity`, `power:4`, `lrelu:0.3`, ...
impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => write!(f, "identity"),
            Activation::Power(d) => write!(f, "power:{d}"),
            Activation::LeakyRelu(s) => write!(f, "lrelu:{s}"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Softmax => write!(f, "softmax"),
            Activation::Step => write!(f, "step"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, param) = match s.split_once(':') {
            Some((t, p)) => (t, Some(p)),
            None => (s, None),
        };
        let act = match (tag, param) {
            ("identity", None) => Activation::Identity,
            ("sigmoid", None) => Activation::Sigmoid,
            ("softmax", None) => Activation::Softmax,
            ("step", None) => Activation::Step,
            ("power", Some(p)) => Activation::Power(
                p.parse()
                    .map_err(|_| Error::arg(format!("bad power degree in {s:?}")))?,
            ),
            ("lrelu", Some(p)) => Activation::LeakyRelu(
                p.parse()
                    .map_err(|_| Error::arg(format!("bad leaky slope in {s:?}")))?,
            ),
            _ => return Err(Error::arg(format!("unknown activation {s:?}"))),
        };
        act.validate()?;
        Ok(act)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Mse => "mse",
            Loss::BinaryCrossEntropy => "bce",
            Loss::CategoricalCrossEntropy => "cce",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Loss::Mse),
            "bce" => Ok(Loss::BinaryCrossEntropy),
            "cce" => Ok(Loss::CategoricalCrossEntropy),
            _ => Err(Error::arg(format!("unknown loss {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    /// `outputs × inputs`, row-major.
    weights: Vec<f64>,
    thresholds: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        thresholds: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::arg("layer dimensions must be positive"));
        }
        if weights.len() != inputs * outputs || thresholds.len() != outputs {
            return Err(Error::arg(format!(
                "layer {inputs}->{outputs} got {} weights and {} thresholds",
                weights.len(),
                thresholds.len()
            )));
        }
        if weights.iter().chain(&thresholds).any(|x| !x.is_finite()) {
            return Err(Error::arg("layer parameters must be finite"));
        }
        activation.validate()?;
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            thresholds,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Result<Self> {
        Self::new(
            inputs,
            outputs,
            vec![0.0; inputs * outputs],
            vec![0.0; outputs],
            activation,
        )
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn thresholds_mut(&mut self) -> &mut [f64] {
        &mut self.thresholds
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn affine(&self, x: &[f64], z: &mut [f64]) {
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *zo = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.thresholds[o];
        }
    }
}

/// Supervision for one sample. `Class(c)` is a 0/1 scalar for single-output
/// nets and one-hot otherwise.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Class(usize),
    Values(&'a [f64]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuralNet {
    layers: Vec<DenseLayer>,
    loss: Loss,
}

impl NeuralNet {
    /// Checks the dimension chain, that softmax only appears last, and the
    /// output/loss pairing (sigmoid ↔ BCE, softmax ↔ CCE, anything else ↔ MSE).
    pub fn new(layers: Vec<DenseLayer>, loss: Loss) -> Result<Self> {
        let last = layers.last().ok_or_else(|| Error::arg("network needs a layer"))?;
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::arg(format!(
                    "layer chain mismatch: {} outputs feed {} inputs",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        if layers[..layers.len() - 1]
            .iter()
            .any(|l| l.activation == Activation::Softmax)
        {
            return Err(Error::arg("softmax is only allowed on the output layer"));
        }
        let ok = matches!(
            (last.activation, loss),
            (Activation::Sigmoid, Loss::BinaryCrossEntropy)
                | (Activation::Softmax, Loss::CategoricalCrossEntropy)
        ) || (!matches!(last.activation, Activation::Sigmoid | Activation::Softmax)
            && loss == Loss::Mse);
        if !ok {
            return Err(Error::arg(format!(
                "output activation {} does not pair with loss {loss}",
                last.activation
            )));
        }
        Ok(NeuralNet { layers, loss })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// Layer widths excluding the input, e.g. `(21, 8, 1)`.
    pub fn architecture(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.outputs).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.thresholds.len())
            .sum()
    }

    /// Parameters in a fixed flat order: per layer, weights then thresholds.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.thresholds))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.thresholds.iter_mut()))
    }

    pub fn has_power_layer(&self) -> bool {
        self.layers
            .iter()
            .any(|l| matches!(l.activation, Activation::Power(_)))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut ws = Workspace::new(self);
        self.forward_ws(input, &mut ws);
        Ok(ws.post.last().unwrap().clone())
    }

    /// Predicted class: threshold 0.5 for one output, argmax otherwise.
    pub fn predict_class(&self, input: &[f64]) -> Result<usize> {
        Ok(class_of(&self.forward(input)?))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::arg(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_ws(&self, input: &[f64], ws: &mut Workspace) {
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = ws.post.split_at_mut(k);
            let x = if k == 0 { input } else { &before[k - 1] };
            layer.affine(x, &mut ws.pre[k]);
            layer.activation.apply(&ws.pre[k], &mut after[0]);
        }
    }

    fn check_target(&self, target: &Target) -> Result<()> {
        let k = self.output_dim();
        match *target {
            Target::Class(c) if k == 1 && c > 1 => {
                Err(Error::arg(format!("label {c} invalid for a single-output net")))
            }
            Target::Class(c) if k > 1 && c >= k => {
                Err(Error::arg(format!("label {c} out of range for {k} classes")))
            }
            Target::Values(v) if v.len() != k => Err(Error::arg(format!(
                "target has {} values, network has {k} outputs",
                v.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Mean loss over the batch and its gradient with respect to every
    /// weight and threshold.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], Target)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        for (x, t) in batch {
            self.check_input(x)?;
            self.check_target(t)?;
        }
        let mut ws = Workspace::new(self);
        let mut grads = Gradients::zeros_like(self);
        let mut total = 0.0;
        for (x, t) in batch {
            total += self.accumulate(x, *t, &mut ws, &mut grads);
        }
        let inv = 1.0 / batch.len() as f64;
        grads.scale(inv);
        Ok((total * inv, grads))
    }

    /// Mean loss over a batch without gradients.
    pub fn batch_loss(&self, batch: &[(&[f64], Target)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        let mut ws = Workspace::new(self);
        let mut total = 0.0;
        for (x, t) in batch {
            self.check_input(x)?;
            self.check_target(t)?;
            self.forward_ws(x, &mut ws);
            total += self.sample_loss(&ws, *t);
        }
        Ok(total / batch.len() as f64)
    }

    /// Loss of the sample whose forward pass is in `ws`.
    pub(crate) fn sample_loss(&self, ws: &Workspace, target: Target) -> f64 {
        let last = self.layers.len() - 1;
        let z = &ws.pre[last];
        let a = &ws.post[last];
        let k = z.len();
        let y = |j: usize| target_value(target, k, j);
        match self.loss {
            Loss::Mse => (0..k).map(|j| (a[j] - y(j)).powi(2)).sum::<f64>() / k as f64,
            Loss::BinaryCrossEntropy => {
                (0..k).map(|j| softplus(z[j]) - y(j) * z[j]).sum::<f64>() / k as f64
            }
            Loss::CategoricalCrossEntropy => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - (0..k).map(|j| y(j) * z[j]).sum::<f64>()
            }
        }
    }

    /// Forward + backward for one sample, adding (unscaled) gradients into
    /// `grads`. Returns the sample loss.
    pub(crate) fn accumulate(
        &self,
        input: &[f64],
        target: Target,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> f64 {
        self.forward_ws(input, ws);
        let loss = self.sample_loss(ws, target);
        let last = self.layers.len() - 1;
        let k = self.output_dim();

        // Output delta dL/dz.
        {
            let a = &ws.post[last];
            let z = &ws.pre[last];
            let delta = &mut ws.delta[last];
            for j in 0..k {
                let y = target_value(target, k, j);
                delta[j] = match self.loss {
                    Loss::BinaryCrossEntropy => (a[j] - y) / k as f64,
                    Loss::CategoricalCrossEntropy => a[j] - y,
                    Loss::Mse => {
                        2.0 * (a[j] - y) / k as f64
                            * self.layers[last].activation.derivative(z[j], a[j])
                    }
                };
            }
        }

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x: &[f64] = if l == 0 { input } else { &ws.post[l - 1] };
            let g = &mut grads.layers[l];
            let delta = &ws.delta[l];
            for (o, &dz) in delta.iter().enumerate() {
                g.thresholds[o] += dz;
                if dz != 0.0 {
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(x).for_each(|(gw, xi)| *gw += dz * xi);
                }
            }
            if l > 0 {
                let (lower, upper) = ws.delta.split_at_mut(l);
                let prev = &mut lower[l - 1];
                let delta = &upper[0];
                prev.iter_mut().for_each(|p| *p = 0.0);
                for (o, &dz) in delta.iter().enumerate() {
                    if dz == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * dz);
                }
                let act = self.layers[l - 1].activation;
                for ((p, &z), &a) in prev.iter_mut().zip(&ws.pre[l - 1]).zip(&ws.post[l - 1]) {
                    *p *= act.derivative(z, a);
                }
            }
        }
        loss
    }
}

fn target_value(target: Target, k: usize, j: usize) -> f64 {
    match target {
        Target::Values(v) => v[j],
        Target::Class(c) if k == 1 => c as f64,
        Target::Class(c) => {
            if c == j {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Threshold 0.5 for a single output, argmax (lowest index on ties) otherwise.
pub fn class_of(output: &[f64]) -> usize {
    if output.len() == 1 {
        return usize::from(output[0] > 0.5);
    }
    output
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Scratch buffers for one forward/backward pass.
#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    pre: Vec<Vec<f64>>,
    pub(crate) post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(net: &NeuralNet) -> Self {
        let bufs = || -> Vec<Vec<f64>> { net.layers.iter().map(|l| vec![0.0; l.outputs]).collect() };
        Workspace {
            pre: bufs(),
            post: bufs(),
            delta: bufs(),
        }
    }

    pub(crate) fn output(&self) -> &[f64] {
        self.post.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
}

/// Gradient with the same layout as the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &NeuralNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    thresholds: vec![0.0; l.thresholds.len()],
                })
                .collect(),
        }
    }

    /// Same flat order as [`NeuralNet::params`].
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.thresholds))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.thresholds.iter_mut()))
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn reset(&mut self) {
        self.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Rescales so the global norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
    }
}
