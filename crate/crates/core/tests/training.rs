use proptest::prelude::*;
use rand::Rng;

use ealm::nn::{
    build_hybrid_net, init_default, Activation, DenseLayer, Loss, NadamConfig, NeuralNet,
};
use ealm::sampling::{build_dataset, substream, Dataset, Provenance, Recipe, Sample, SplitSizes};
use ealm::training::{
    evaluate, registry, run_experiment, run_experiment_with, train, Clip, TrainConfig,
    INIT_STREAM,
};
use ealm::{QuditState, Shape};

fn points(points: &[(Vec<f64>, usize)], classes: usize) -> Dataset {
    let shape = Shape::new(points[0].0.len(), 1).unwrap();
    let samples = points
        .iter()
        .map(|(x, l)| Sample {
            state: QuditState::new(shape, x.clone()).unwrap(),
            label: *l,
        })
        .collect();
    Dataset::new(shape, samples, classes, Provenance { seed: 0, recipe: "points".into() }).unwrap()
}

fn sigmoid_neuron(inputs: usize, w: Vec<f64>, t: f64) -> NeuralNet {
    let layer = DenseLayer::new(inputs, 1, w, vec![t], Activation::Sigmoid).unwrap();
    NeuralNet::new(vec![layer], Loss::BinaryCrossEntropy).unwrap()
}

#[test]
fn or_with_one_sigmoid_neuron() {
    let data = points(
        &[
            (vec![0.0, 0.0], 0),
            (vec![0.0, 1.0], 1),
            (vec![1.0, 0.0], 1),
            (vec![1.0, 1.0], 1),
        ],
        2,
    );
    let net = sigmoid_neuron(2, vec![0.0, 0.0], 0.0);
    let cfg = TrainConfig {
        epochs: 2000,
        batch_size: 4,
        nadam: NadamConfig::default().with_learning_rate(0.05),
        ..TrainConfig::default()
    };
    let (net, report) = train(net, &data, &data, &cfg).unwrap();
    assert_eq!(report.train_acc, 1.0);
    // Boundary lies between the origin and the other three corners.
    let w = net.layers()[0].weights();
    let t = net.layers()[0].thresholds()[0];
    assert!(t < 0.0 && w[0] + t > 0.0 && w[1] + t > 0.0);
}

/// Points on the unit circle (class 0) versus points at radius in
/// `[0, 0.9] ∪ [1.1, 1.5]` (class 1).
fn circle_data(n: usize, seed: u64) -> Dataset {
    let mut rng = substream(seed, 0, 0);
    let pts: Vec<(Vec<f64>, usize)> = (0..n)
        .map(|i| {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let r = match i % 2 {
                0 => 1.0,
                _ => {
                    let u: f64 = rng.random_range(0.0..1.3);
                    if u < 0.9 { u } else { u + 0.2 }
                }
            };
            (vec![r * theta.cos(), r * theta.sin()], i % 2)
        })
        .collect();
    points(&pts, 2)
}

#[test]
fn circle_hybrid_net() {
    let (tr, va, te) = (circle_data(10_000, 1), circle_data(2000, 2), circle_data(2000, 3));
    let mut net = build_hybrid_net(2, 2, 2, 4, 1).unwrap();
    init_default(&mut net, &mut substream(9, 0, 0)).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 32,
        nadam: NadamConfig::default().with_learning_rate(0.01),
        ..TrainConfig::default()
    };
    let (net, _) = train(net, &tr, &va, &cfg).unwrap();
    let (acc, _) = evaluate(&net, &te).unwrap();
    assert!(acc >= 0.95, "test accuracy {acc}");
}

#[test]
fn training_is_deterministic() {
    let a = run_experiment("table2-2x2", 0.02, 5).unwrap();
    let b = run_experiment("table2-2x2", 0.02, 5).unwrap();
    assert_eq!(a, b);
    let c = run_experiment("table2-2x2", 0.02, 6).unwrap();
    assert_ne!(a, c);
}

#[test]
fn evaluate_on_val_matches_last_epoch() {
    let exp = ealm::training::find_experiment("table2-2x2x2").unwrap();
    let cfg = TrainConfig { epochs: 3, seed: 2, ..TrainConfig::default() };
    let (tr, va, _) = build_dataset(exp.recipe, exp.shape(), SplitSizes::new(2000, 500, 0), 2).unwrap();
    let mut net = exp.build_net().unwrap();
    init_default(&mut net, &mut substream(2, 0, 0)).unwrap();
    let (net, report) = train(net, &tr, &va, &cfg).unwrap();
    let last = report.epoch_history.last().unwrap();
    assert_eq!(report.epoch_history.len(), 3);
    assert_eq!(evaluate(&net, &va).unwrap(), (last.val_acc, last.val_loss));
    assert_eq!(report.val_acc, last.val_acc);
}

#[test]
fn empty_dataset_is_rejected() {
    let exp = ealm::training::find_experiment("table2-2x2").unwrap();
    let (tr, va, _) = build_dataset(exp.recipe, exp.shape(), SplitSizes::new(0, 10, 0), 1).unwrap();
    let net = exp.build_net().unwrap();
    assert!(train(net.clone(), &tr, &va, &TrainConfig::default()).is_err());
    assert!(evaluate(&net, &tr).is_err());
}

#[test]
fn shape_mismatch_is_rejected() {
    let (tr, va, _) = build_dataset(
        Recipe::SeparableVsEntangled,
        Shape::new(2, 3).unwrap(),
        SplitSizes::new(10, 10, 0),
        1,
    )
    .unwrap();
    let net = build_hybrid_net(4, 2, 4, 4, 1).unwrap();
    assert!(train(net, &tr, &va, &TrainConfig::default()).is_err());
}

#[test]
fn constant_correct_net_on_single_class() {
    let data = points(&[(vec![0.3, 0.1], 1), (vec![-0.5, 0.2], 1), (vec![0.0, 0.0], 1)], 2);
    let net = sigmoid_neuron(2, vec![0.0, 0.0], 5.0);
    assert_eq!(evaluate(&net, &data).unwrap().0, 1.0);
}

#[test]
fn coin_flip_net_scores_one_half() {
    // The sign of coordinate 0 is independent of separability.
    let (data, _, _) = build_dataset(
        Recipe::SeparableVsEntangled,
        Shape::new(2, 2).unwrap(),
        SplitSizes::new(10_000, 0, 0),
        21,
    )
    .unwrap();
    let net = sigmoid_neuron(4, vec![50.0, 0.0, 0.0, 0.0], 0.0);
    let (acc, _) = evaluate(&net, &data).unwrap();
    assert!((acc - 0.5).abs() <= 0.02, "{acc}");
}

#[test]
fn training_never_hurts_across_registry() {
    for exp in registry() {
        let sizes = exp.sizes.scaled(0.05);
        let cfg = TrainConfig { epochs: 10, seed: 4, ..TrainConfig::default() };
        let (tr, _, _) = build_dataset(exp.recipe, exp.shape(), sizes, cfg.seed).unwrap();
        let outcome = run_experiment_with(exp, sizes, &cfg).unwrap();
        let mut fresh = exp.build_net().unwrap();
        init_default(&mut fresh, &mut substream(cfg.seed, INIT_STREAM, 0)).unwrap();
        let (before, _) = evaluate(&fresh, &tr).unwrap();
        assert!(
            outcome.report.train_acc >= before,
            "{}: {} < {before}",
            exp.name,
            outcome.report.train_acc
        );
    }
}

#[test]
fn clip_policy_validation() {
    let cfg = TrainConfig { clip: Clip::Norm(-1.0), ..TrainConfig::default() };
    assert!(cfg.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_accuracy_is_one_minus_hamming_error(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        t in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let (data, _, _) = build_dataset(
            Recipe::SeparableVsEntangled,
            Shape::new(2, 2).unwrap(),
            SplitSizes::new(300, 0, 0),
            seed,
        )
        .unwrap();
        let net = sigmoid_neuron(4, w, t);
        let mut wrong = 0usize;
        for s in data.samples() {
            let out = net.forward(s.state.coords()).unwrap()[0];
            let predicted = if out > 0.5 { 1 } else { 0 };
            if predicted != s.label {
                wrong += 1;
            }
        }
        let (acc, _) = evaluate(&net, &data).unwrap();
        prop_assert!((acc - (1.0 - wrong as f64 / data.len() as f64)).abs() < 1e-12);
        prop_assert_eq!((acc * data.len() as f64).round() as usize, data.len() - wrong);
    }
}
