//! Minibatch Nadam training, evaluation, and the registry of experiment rows
//! (tables of separability, degeneracy and rank classifiers).

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::{
    build_hybrid_net, build_relu_net, class_of, init_default, nadam_step, Gradients, NadamConfig,
    NadamState, NeuralNet, Target, Workspace,
};
use crate::sampling::{build_dataset, substream, Dataset, Recipe, SplitSizes};
use crate::tensor::Shape;

/// Global gradient-norm cap applied by [`Clip::Auto`] to nets with power layers.
pub const POWER_NET_CLIP: f64 = 5.0;

const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// RNG stream that [`run_experiment_with`] draws initial weights from.
pub const INIT_STREAM: u64 = 0x494e_4954;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clip {
    /// Clip at [`POWER_NET_CLIP`] when the net has a power layer, never otherwise.
    Auto,
    Off,
    Norm(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub nadam: NadamConfig,
    pub seed: u64,
    pub shuffle: bool,
    pub clip: Clip,
    /// Stop once validation loss has not improved for this many epochs.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            nadam: NadamConfig::default(),
            seed: 0,
            shuffle: true,
            clip: Clip::Auto,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::arg("epochs and batch size must be >= 1"));
        }
        if let Clip::Norm(c) = self.clip {
            if !(c > 0.0) {
                return Err(Error::arg("clip norm must be positive"));
            }
        }
        self.nadam.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub train_acc: f64,
    pub val_acc: f64,
    /// Filled in when a held-out test split is evaluated.
    pub test_acc: Option<f64>,
    /// Mean loss of the final network over the training split.
    pub final_loss: f64,
    pub epoch_history: Vec<EpochRecord>,
}

fn check_compatible(net: &NeuralNet, data: &Dataset) -> Result<()> {
    if data.shape().len() != net.input_dim() {
        return Err(Error::arg(format!(
            "dataset shape {} has {} coordinates, network expects {}",
            data.shape(),
            data.shape().len(),
            net.input_dim()
        )));
    }
    let classes = if net.output_dim() == 1 { 2 } else { net.output_dim() };
    if data.num_classes() != classes {
        return Err(Error::arg(format!(
            "dataset has {} classes, network predicts {classes}",
            data.num_classes()
        )));
    }
    Ok(())
}

/// Accuracy (threshold 0.5 or argmax) and mean loss of `net` on `data`.
pub fn evaluate(net: &NeuralNet, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::arg("cannot evaluate on an empty dataset"));
    }
    check_compatible(net, data)?;
    let mut ws = Workspace::new(net);
    let mut correct = 0usize;
    let mut loss = 0.0;
    for s in data.samples() {
        net.forward_ws(s.state.coords(), &mut ws);
        loss += net.sample_loss(&ws, Target::Class(s.label));
        if class_of(ws.output()) == s.label {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok((correct as f64 / n, loss / n))
}

/// Shuffled-minibatch Nadam. Deterministic for a fixed `config.seed`: the
/// epoch-`e` permutation comes from its own RNG substream and gradients are
/// summed in batch order.
pub fn train(
    mut net: NeuralNet,
    train: &Dataset,
    val: &Dataset,
    config: &TrainConfig,
) -> Result<(NeuralNet, TrainReport)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::arg("training and validation sets must be non-empty"));
    }
    check_compatible(&net, train)?;
    check_compatible(&net, val)?;

    let clip = match config.clip {
        Clip::Auto if net.has_power_layer() => Some(POWER_NET_CLIP),
        Clip::Auto | Clip::Off => None,
        Clip::Norm(c) => Some(c),
    };
    let mut state = NadamState::new(&net);
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = Workspace::new(&net);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut substream(config.seed, SHUFFLE_STREAM, epoch as u64));
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            for &i in batch {
                let s = &train.samples()[i];
                epoch_loss += net.accumulate(s.state.coords(), Target::Class(s.label), &mut ws, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if let Some(c) = clip {
                grads.clip_norm(c);
            }
            nadam_step(&mut net, &grads, &config.nadam, &mut state)?;
        }
        if net.params().any(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("training diverged in epoch {}", epoch + 1)));
        }
        let (val_acc, val_loss) = evaluate(&net, val)?;
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: epoch_loss / train.len() as f64,
            val_loss,
            val_acc,
        });
        if let Some(patience) = config.patience {
            if val_loss < best_val {
                best_val = val_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }

    let (train_acc, final_loss) = evaluate(&net, train)?;
    let val_acc = history.last().map(|r| r.val_acc).unwrap_or(0.0);
    Ok((
        net,
        TrainReport {
            train_acc,
            val_acc,
            test_acc: None,
            final_loss,
            epoch_history: history,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// Power layer of `p1` neurons, `p2` LeakyReLU neurons, then the output.
    Hybrid { power: u32, p1: usize, p2: usize },
    /// LeakyReLU hidden layers of the given widths, then the output.
    Relu { widths: &'static [usize] },
}

/// One row of the results tables: recipe, format, architecture, split sizes
/// and the reported test accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: &'static str,
    pub table: u8,
    pub recipe: Recipe,
    pub d: usize,
    pub n: usize,
    pub architecture: Architecture,
    pub sizes: SplitSizes,
    pub reported_test_acc: f64,
}

const RELU_SEP: &[usize] = &[100, 50, 25, 16];
const RELU_WIDE: &[usize] = &[200, 100, 50, 16];
const RELU_RANK: &[usize] = &[200, 100, 50, 25];

macro_rules! row {
    ($name:expr, $table:expr, $recipe:ident, $d:expr, $n:expr, $arch:expr, ($tr:expr, $va:expr, $te:expr), $acc:expr) => {
        Experiment {
            name: $name,
            table: $table,
            recipe: Recipe::$recipe,
            d: $d,
            n: $n,
            architecture: $arch,
            sizes: SplitSizes {
                train: $tr,
                val: $va,
                test: $te,
            },
            reported_test_acc: $acc,
        }
    };
}

const fn hybrid(power: u32, p1: usize, p2: usize) -> Architecture {
    Architecture::Hybrid { power, p1, p2 }
}

const fn relu(widths: &'static [usize]) -> Architecture {
    Architecture::Relu { widths }
}

static REGISTRY: [Experiment; 18] = [
    row!("table2-2x2", 2, SeparableVsEntangled, 2, 2, hybrid(2, 4, 4), (56200, 12800, 32000), 0.9663),
    row!("table2-2x2x2", 2, SeparableVsEntangled, 2, 3, hybrid(2, 21, 8), (56200, 12800, 32000), 0.9444),
    row!("table2-2^4", 2, SeparableVsEntangled, 2, 4, hybrid(2, 1188, 8), (112400, 25600, 32000), 0.9133),
    row!("table2-3x3x3", 2, SeparableVsEntangled, 3, 3, hybrid(2, 332, 12), (56200, 12800, 32000), 0.9294),
    row!("table3-2x2", 3, SeparableVsEntangled, 2, 2, relu(RELU_SEP), (102400, 25600, 32000), 0.9883),
    row!("table3-2x2x2", 3, SeparableVsEntangled, 2, 3, relu(RELU_SEP), (102400, 25600, 32000), 0.9755),
    row!("table3-2^4", 3, SeparableVsEntangled, 2, 4, relu(RELU_SEP), (502600, 55600, 32000), 0.9953),
    row!("table3-2^5", 3, SeparableVsEntangled, 2, 5, relu(RELU_SEP), (502600, 55600, 32000), 0.9855),
    row!("table3-3x3x3", 3, SeparableVsEntangled, 3, 3, relu(RELU_SEP), (502600, 55600, 32000), 0.9792),
    row!("table4-2x2x2", 4, DegenerateVsNondegenerate, 2, 3, hybrid(4, 60, 10), (202600, 25600, 32000), 0.9209),
    row!("table5-2x2x2", 5, DegenerateVsNondegenerate, 2, 3, relu(RELU_SEP), (502600, 55600, 32000), 0.9274),
    row!("table5-2^4", 5, DegenerateVsNondegenerate, 2, 4, relu(RELU_WIDE), (252400, 55600, 52000), 0.9594),
    row!("table5-2^5", 5, DegenerateVsNondegenerate, 2, 5, relu(RELU_SEP), (252400, 55600, 52000), 0.9883),
    row!("table5-3x3x3", 5, DegenerateVsNondegenerate, 3, 3, relu(RELU_SEP), (352400, 55600, 52000), 0.9683),
    row!("table6-2x2x2", 6, Rank3Qubit, 2, 3, hybrid(2, 169, 25), (102400, 25600, 32000), 0.8795),
    row!("table7-2x2x2", 7, Rank3Qubit, 2, 3, relu(RELU_RANK), (502500, 55600, 52000), 0.9379),
    row!("table7-2^4", 7, BorderRank4, 2, 4, relu(RELU_RANK), (502400, 55600, 52000), 0.8447),
    row!("table7-2^5", 7, BorderRank5, 2, 5, relu(RELU_RANK), (802400, 55600, 52000), 0.7977),
];

pub fn registry() -> &'static [Experiment] {
    &REGISTRY
}

pub fn find_experiment(name: &str) -> Result<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::arg(format!("unknown experiment {name:?}")))
}

impl Experiment {
    pub fn shape(&self) -> Shape {
        Shape::new(self.d, self.n).expect("registry shapes are valid")
    }

    /// Output width: 1 for binary tasks, the class count otherwise.
    pub fn outputs(&self) -> usize {
        match self.recipe.num_classes() {
            2 => 1,
            k => k,
        }
    }

    /// Untrained (zero-weight) network for this row.
    pub fn build_net(&self) -> Result<NeuralNet> {
        let inputs = self.shape().len();
        match self.architecture {
            Architecture::Hybrid { power, p1, p2 } => {
                build_hybrid_net(inputs, power, p1, p2, self.outputs())
            }
            Architecture::Relu { widths } => build_relu_net(inputs, widths, self.outputs()),
        }
    }

    /// Layer widths as printed in the tables, e.g. `(21,8,1)`.
    pub fn architecture_label(&self) -> String {
        let widths: Vec<usize> = match self.architecture {
            Architecture::Hybrid { p1, p2, .. } => vec![p1, p2, self.outputs()],
            Architecture::Relu { widths } => {
                widths.iter().copied().chain([self.outputs()]).collect()
            }
        };
        let parts: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
        format!("({})", parts.join(","))
    }

    /// Tensor format label, e.g. `2x2x2` or `2^5`.
    pub fn format_label(&self) -> String {
        if self.n >= 4 {
            format!("{}^{}", self.d, self.n)
        } else {
            vec![self.d.to_string(); self.n].join("x")
        }
    }
}

/// Trained network plus its report (with `test_acc` filled in).
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub net: NeuralNet,
    pub report: TrainReport,
}

/// Runs a registry row at `scale` times the reported split sizes with the
/// default training configuration.
pub fn run_experiment(name: &str, scale: f64, seed: u64) -> Result<TrainReport> {
    let exp = find_experiment(name)?;
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::arg(format!("scale {scale} outside (0,1]")));
    }
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    Ok(run_experiment_with(exp, exp.sizes.scaled(scale), &cfg)?.report)
}

/// Builds the row's datasets (seeded by `config.seed`), initializes and
/// trains its network, and scores the test split.
pub fn run_experiment_with(
    exp: &Experiment,
    sizes: SplitSizes,
    config: &TrainConfig,
) -> Result<ExperimentOutcome> {
    let (tr, va, te) = build_dataset(exp.recipe, exp.shape(), sizes, config.seed)?;
    let mut net = exp.build_net()?;
    init_default(&mut net, &mut substream(config.seed, INIT_STREAM, 0))?;
    let (net, mut report) = train(net, &tr, &va, config)?;
    report.test_acc = Some(evaluate(&net, &te)?.0);
    Ok(ExperimentOutcome { net, report })
}

pub const REPORT_CSV_HEADER: &str = "experiment,tensor_size,architecture,train_acc,val_acc,test_acc,loss";

/// One CSV row mirroring the tables' columns.
pub fn report_csv_row(exp: &Experiment, report: &TrainReport) -> String {
    let mut row = String::new();
    let test = report
        .test_acc
        .map(|a| format!("{a:.6}"))
        .unwrap_or_default();
    write!(
        row,
        "{},{},\"{}\",{:.6},{:.6},{},{:.6}",
        exp.name,
        exp.format_label(),
        exp.architecture_label(),
        report.train_acc,
        report.val_acc,
        test,
        report.final_loss
    )
    .unwrap();
    row
}
