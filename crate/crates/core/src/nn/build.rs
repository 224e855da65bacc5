//! Network constructors: exact (training-free) models of linear spaces and
//! quadrics, and the trainable hybrid / LeakyReLU architectures.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{Activation, DenseLayer, Loss, NeuralNet};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.3;

/// Width of the number-in-interval recognition layer.
pub const INTERVAL_LAYER_WIDTH: usize = 4;

const POWER_INIT_SIGMA: f64 = 0.05;

/// Single identity neuron computing `a₁x₁ + … + aₙxₙ + a_{n+1}`; its output
/// vanishes exactly on the hyperplane.
pub fn build_hyperplane_net(coeffs: &[f64], constant: f64) -> Result<NeuralNet> {
    build_subspace_net(&[(coeffs.to_vec(), constant)])
}

/// One identity neuron per affine equation; the output is all zeros exactly
/// on the intersection.
pub fn build_subspace_net(equations: &[(Vec<f64>, f64)]) -> Result<NeuralNet> {
    let n = equations
        .first()
        .map(|(c, _)| c.len())
        .ok_or_else(|| Error::arg("need at least one equation"))?;
    let mut weights = Vec::with_capacity(n * equations.len());
    let mut thresholds = Vec::with_capacity(equations.len());
    for (coeffs, constant) in equations {
        if coeffs.len() != n || n == 0 {
            return Err(Error::arg("equations must share a positive number of variables"));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::arg("linear part of an equation is zero"));
        }
        weights.extend_from_slice(coeffs);
        thresholds.push(*constant);
    }
    let layer = DenseLayer::new(n, equations.len(), weights, thresholds, Activation::Identity)?;
    NeuralNet::new(vec![layer], Loss::Mse)
}

/// Exact two-layer model of the quadric `x⃗ᵀAx⃗` with `x⃗ = (x₁,…,x_{n−1},1)`.
///
/// `a` is a row-major symmetric `n×n` matrix. When the quadratic block (the
/// leading `(n−1)×(n−1)` minor) is invertible, diagonalizing it and completing
/// squares gives `n−1` square neurons plus a constant folded into the output
/// threshold. Otherwise the full matrix is diagonalized, which may need up to
/// `n` square neurons (a parabola cannot be written with fewer).
pub fn build_quadric_net(a: &[f64], n: usize) -> Result<NeuralNet> {
    if n < 2 || a.len() != n * n {
        return Err(Error::arg("quadric matrix must be n×n with n >= 2"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("quadric matrix must be finite"));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::arg("quadric matrix is not symmetric"));
            }
        }
    }
    let m = n - 1;
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    let block: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| a[i * n + j])
        .collect();
    let (lambda, q) = symmetric_eigen(&block, m);

    // (weights, threshold, output weight) per square neuron
    let mut terms: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let mut constant;
    if lambda.iter().all(|l| l.abs() > tol) {
        constant = a[m * n + m];
        for k in 0..m {
            let w: Vec<f64> = (0..m).map(|i| q[i * m + k]).collect();
            let b_k: f64 = (0..m).map(|i| q[i * m + k] * a[i * n + m]).sum();
            let shift = b_k / lambda[k];
            constant -= b_k * shift;
            terms.push((w, shift, lambda[k]));
        }
    } else {
        constant = 0.0;
        let (lambda, q) = symmetric_eigen(a, n);
        for k in 0..n {
            if lambda[k].abs() <= tol {
                continue;
            }
            let w: Vec<f64> = (0..m).map(|i| q[i * n + k]).collect();
            let shift = q[m * n + k];
            if w.iter().all(|x| x.abs() < 1e-14) {
                constant += lambda[k] * shift * shift;
            } else {
                terms.push((w, shift, lambda[k]));
            }
        }
    }
    if terms.is_empty() {
        terms.push((vec![0.0; m], 0.0, 0.0));
    }

    let p = terms.len();
    let mut w1 = Vec::with_capacity(p * m);
    let mut t1 = Vec::with_capacity(p);
    let mut w2 = Vec::with_capacity(p);
    for (w, shift, out) in terms {
        w1.extend(w);
        t1.push(shift);
        w2.push(out);
    }
    NeuralNet::new(
        vec![
            DenseLayer::new(m, p, w1, t1, Activation::Power(2))?,
            DenseLayer::new(p, 1, w2, vec![constant], Activation::Identity)?,
        ],
        Loss::Mse,
    )
}

fn output_layer(inputs: usize, classes: usize) -> Result<(DenseLayer, Loss)> {
    if classes == 0 {
        return Err(Error::arg("need at least one output"));
    }
    Ok(if classes == 1 {
        (DenseLayer::zeros(inputs, 1, Activation::Sigmoid)?, Loss::BinaryCrossEntropy)
    } else {
        (
            DenseLayer::zeros(inputs, classes, Activation::Softmax)?,
            Loss::CategoricalCrossEntropy,
        )
    })
}

/// Hybrid network `(p1, p2, k)`: `p1` neurons `x ↦ x^d`, feeding `p2`
/// LeakyReLU neurons directly, then `k` outputs (sigmoid for `k = 1`,
/// softmax otherwise). Weights are zero until initialized.
pub fn build_hybrid_net(
    inputs: usize,
    power: u32,
    p1: usize,
    p2: usize,
    classes: usize,
) -> Result<NeuralNet> {
    let (out, loss) = output_layer(p2, classes)?;
    NeuralNet::new(
        vec![
            DenseLayer::zeros(inputs, p1, Activation::Power(power))?,
            DenseLayer::zeros(p1, p2, Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE))?,
            out,
        ],
        loss,
    )
}

/// All-LeakyReLU hidden layers of the given widths, then `k` outputs.
pub fn build_relu_net(inputs: usize, widths: &[usize], classes: usize) -> Result<NeuralNet> {
    if widths.is_empty() {
        return Err(Error::arg("need at least one hidden layer"));
    }
    let mut layers = Vec::with_capacity(widths.len() + 1);
    let mut prev = inputs;
    for &w in widths {
        layers.push(DenseLayer::zeros(prev, w, Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE))?);
        prev = w;
    }
    let (out, loss) = output_layer(prev, classes)?;
    layers.push(out);
    NeuralNet::new(layers, loss)
}

/// Variety-membership classifier: `terms` neurons `x ↦ x^d`, one identity
/// neuron summing them, the 4-neuron LeakyReLU interval-recognition layer,
/// and a sigmoid output.
pub fn build_variety_net(inputs: usize, power: u32, terms: usize) -> Result<NeuralNet> {
    NeuralNet::new(
        vec![
            DenseLayer::zeros(inputs, terms, Activation::Power(power))?,
            DenseLayer::zeros(terms, 1, Activation::Identity)?,
            DenseLayer::zeros(1, INTERVAL_LAYER_WIDTH, Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE))?,
            DenseLayer::zeros(INTERVAL_LAYER_WIDTH, 1, Activation::Sigmoid)?,
        ],
        Loss::BinaryCrossEntropy,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitScheme {
    /// `U(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))`.
    GlorotUniform,
    SmallNormal(f64),
}

impl InitScheme {
    fn fill<R: Rng + ?Sized>(&self, layer: &mut DenseLayer, rng: &mut R) -> Result<()> {
        match *self {
            InitScheme::GlorotUniform => {
                let bound = (6.0 / (layer.inputs() + layer.outputs()) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound)
                    .map_err(|e| Error::arg(e.to_string()))?;
                layer.weights_mut().iter_mut().for_each(|w| *w = dist.sample(rng));
            }
            InitScheme::SmallNormal(sigma) => {
                let dist = Normal::new(0.0, sigma).map_err(|e| Error::arg(e.to_string()))?;
                layer.weights_mut().iter_mut().for_each(|w| *w = dist.sample(rng));
            }
        }
        layer.thresholds_mut().iter_mut().for_each(|t| *t = 0.0);
        Ok(())
    }
}

/// Reinitializes every layer with `scheme`; thresholds are zeroed.
pub fn init_weights<R: Rng + ?Sized>(
    net: &mut NeuralNet,
    scheme: InitScheme,
    rng: &mut R,
) -> Result<()> {
    for layer in net.layers_mut() {
        scheme.fill(layer, rng)?;
    }
    Ok(())
}

/// Glorot-uniform everywhere except power layers, which get `N(0, 0.05²)`.
pub fn init_default<R: Rng + ?Sized>(net: &mut NeuralNet, rng: &mut R) -> Result<()> {
    for layer in net.layers_mut() {
        let scheme = match layer.activation() {
            Activation::Power(_) => InitScheme::SmallNormal(POWER_INIT_SIGMA),
            _ => InitScheme::GlorotUniform,
        };
        scheme.fill(layer, rng)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::substream;

    #[test]
    fn hyperplane_line() {
        let net = build_hyperplane_net(&[1.0, 1.0], -0.5).unwrap();
        assert_eq!(net.forward(&[0.25, 0.25]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![1.5]);
        assert!(build_hyperplane_net(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn codim_two_line_in_space() {
        // x = 0 and y − z = 1 cut out a line in ℝ³.
        let net = build_subspace_net(&[(vec![1.0, 0.0, 0.0], 0.0), (vec![0.0, 1.0, -1.0], -1.0)])
            .unwrap();
        assert_eq!(net.forward(&[0.0, 3.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_ne!(net.forward(&[0.0, 3.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn circle_quadric() {
        let a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0];
        let net = build_quadric_net(&a, 3).unwrap();
        assert_eq!(net.architecture(), vec![2, 1]);
        assert!(net.forward(&[1.0, 0.0]).unwrap()[0].abs() < 1e-15);
        assert!((net.forward(&[0.0, 0.0]).unwrap()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_quadric_is_constant_zero() {
        let net = build_quadric_net(&[0.0; 9], 3).unwrap();
        assert_eq!(net.forward(&[0.7, -2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn parabola_needs_full_diagonalization() {
        // y − x² ↦ A with a₁₁ = −1, a₂₃ = a₃₂ = ½.
        let a = [-1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0];
        let net = build_quadric_net(&a, 3).unwrap();
        for (x, y) in [(0.5, 0.25), (2.0, 1.0), (-1.0, 3.0)] {
            let v = net.forward(&[x, y]).unwrap()[0];
            assert!((v - (y - x * x)).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn quadric_rejects_asymmetric() {
        assert!(build_quadric_net(&[1.0, 2.0, 0.0, 1.0], 2).is_err());
        assert!(build_quadric_net(&[1.0], 1).is_err());
    }

    #[test]
    fn paper_architectures() {
        assert_eq!(build_hybrid_net(8, 2, 21, 8, 1).unwrap().architecture(), vec![21, 8, 1]);
        assert_eq!(build_hybrid_net(8, 4, 60, 10, 1).unwrap().architecture(), vec![60, 10, 1]);
        let rank = build_hybrid_net(8, 2, 169, 25, 3).unwrap();
        assert_eq!(rank.architecture(), vec![169, 25, 3]);
        assert_eq!(rank.loss(), Loss::CategoricalCrossEntropy);
        assert_eq!(
            build_relu_net(4, &[100, 50, 25, 16], 1).unwrap().architecture(),
            vec![100, 50, 25, 16, 1]
        );
        assert_eq!(
            build_relu_net(8, &[200, 100, 50, 25], 3).unwrap().architecture(),
            vec![200, 100, 50, 25, 3]
        );
        assert_eq!(
            build_relu_net(16, &[200, 100, 50, 16], 1).unwrap().architecture(),
            vec![200, 100, 50, 16, 1]
        );
        assert!(build_relu_net(4, &[], 1).is_err());
        let v = build_variety_net(8, 4, 42).unwrap();
        assert_eq!(v.architecture(), vec![42, 1, 4, 1]);
    }

    #[test]
    fn glorot_bounds_and_reproducibility() {
        let mut net = build_relu_net(8, &[60, 10], 1).unwrap();
        init_weights(&mut net, InitScheme::GlorotUniform, &mut substream(1, 0, 0)).unwrap();
        for l in net.layers() {
            let bound = (6.0 / (l.inputs() + l.outputs()) as f64).sqrt();
            assert!(l.weights().iter().all(|w| w.abs() <= bound));
            assert!(l.thresholds().iter().all(|&t| t == 0.0));
        }
        let mut again = build_relu_net(8, &[60, 10], 1).unwrap();
        init_weights(&mut again, InitScheme::GlorotUniform, &mut substream(1, 0, 0)).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn small_normal_sigma() {
        let mut net = build_relu_net(1000, &[100], 1).unwrap();
        init_weights(&mut net, InitScheme::SmallNormal(0.05), &mut substream(2, 0, 0)).unwrap();
        let w = net.layers()[0].weights();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((sd - 0.05).abs() < 0.05 * 0.05, "{sd}");
    }
}
