#![allow(dead_code)]

use ealm::nn::{init_weights, Activation, DenseLayer, InitScheme, Loss, NeuralNet, Target};
use ealm::sampling::substream;
use rand::Rng;

/// One of the activation/loss pairings exercised by the gradient checks.
#[derive(Clone, Copy, Debug)]
pub enum GradCase {
    Identity,
    Power2,
    Power4,
    LeakyRelu,
    SigmoidBce,
    SoftmaxCce,
}

pub const GRAD_CASES: [GradCase; 6] = [
    GradCase::Identity,
    GradCase::Power2,
    GradCase::Power4,
    GradCase::LeakyRelu,
    GradCase::SigmoidBce,
    GradCase::SoftmaxCce,
];

fn layer(i: usize, o: usize, act: Activation) -> DenseLayer {
    DenseLayer::zeros(i, o, act).unwrap()
}

/// Two-layer net of 8 inputs whose hidden or output layer uses the case's
/// activation, with random weights and thresholds.
pub fn grad_net(case: GradCase, seed: u64) -> NeuralNet {
    let (hidden, out, loss) = match case {
        GradCase::Identity => (Activation::Identity, layer(10, 2, Activation::Identity), Loss::Mse),
        GradCase::Power2 => (Activation::Power(2), layer(10, 2, Activation::Identity), Loss::Mse),
        GradCase::Power4 => (Activation::Power(4), layer(10, 2, Activation::Identity), Loss::Mse),
        GradCase::LeakyRelu => (Activation::LeakyRelu(0.3), layer(10, 2, Activation::Identity), Loss::Mse),
        GradCase::SigmoidBce => (
            Activation::LeakyRelu(0.3),
            layer(10, 1, Activation::Sigmoid),
            Loss::BinaryCrossEntropy,
        ),
        GradCase::SoftmaxCce => (
            Activation::Sigmoid,
            layer(10, 3, Activation::Softmax),
            Loss::CategoricalCrossEntropy,
        ),
    };
    let mut net = NeuralNet::new(vec![layer(8, 10, hidden), out], loss).unwrap();
    let mut rng = substream(seed, 0, 0);
    init_weights(&mut net, InitScheme::SmallNormal(0.5), &mut rng).unwrap();
    for l in net.layers_mut() {
        for t in l.thresholds_mut() {
            *t = rng.random_range(-0.5..0.5);
        }
    }
    net
}

/// Largest relative error between backprop and central differences over
/// `coords` randomly chosen parameters, on a 4-sample batch.
pub fn max_gradient_error(case: GradCase, seed: u64, coords: usize) -> f64 {
    let mut net = grad_net(case, seed);
    let mut rng = substream(seed, 1, 0);
    let inputs: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let values: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let targets: Vec<Target> = (0..4)
        .map(|i| match case {
            GradCase::SigmoidBce => Target::Class(i % 2),
            GradCase::SoftmaxCce => Target::Class(i % 3),
            _ => Target::Values(&values[i]),
        })
        .collect();
    let batch: Vec<(&[f64], Target)> = inputs
        .iter()
        .zip(&targets)
        .map(|(x, t)| (x.as_slice(), *t))
        .collect();

    let (_, grads) = net.loss_and_gradient(&batch).unwrap();
    let analytic: Vec<f64> = grads.iter().copied().collect();
    let n = net.num_params();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..coords {
        let k = rng.random_range(0..n);
        let orig = *net.params().nth(k).unwrap();
        *net.params_mut().nth(k).unwrap() = orig + h;
        let up = net.batch_loss(&batch).unwrap();
        *net.params_mut().nth(k).unwrap() = orig - h;
        let down = net.batch_loss(&batch).unwrap();
        *net.params_mut().nth(k).unwrap() = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}
