//! Orbit-vote prediction, the composed 3-qubit classifier, and named states.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{NeuralNet, Workspace, class_of};
use crate::sampling::{apply_slocc, random_slocc};
use crate::tensor::{QuditState, Shape};

/// Default vote count for binary classifiers.
pub const BINARY_VOTES: usize = 1000;
/// Default vote count for rank classifiers.
pub const RANK_VOTES: usize = 10000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionHistogram {
    pub class_counts: Vec<usize>,
    pub num_votes: usize,
    /// Most frequent class; the lowest index wins a tie.
    pub majority_class: usize,
    pub tie: bool,
}

impl PredictionHistogram {
    pub fn from_counts(class_counts: Vec<usize>) -> Result<Self> {
        if class_counts.is_empty() {
            return Err(Error::arg("histogram needs at least one class"));
        }
        let max = *class_counts.iter().max().unwrap();
        let majority_class = class_counts.iter().position(|&c| c == max).unwrap();
        let tie = class_counts.iter().filter(|&&c| c == max).count() > 1;
        Ok(PredictionHistogram {
            num_votes: class_counts.iter().sum(),
            class_counts,
            majority_class,
            tie,
        })
    }

    pub fn fraction(&self, class: usize) -> f64 {
        if self.num_votes == 0 {
            return 0.0;
        }
        self.class_counts.get(class).copied().unwrap_or(0) as f64 / self.num_votes as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count\n");
        for (c, n) in self.class_counts.iter().enumerate() {
            out.push_str(&format!("{c},{n}\n"));
        }
        out
    }

    /// Horizontal bars scaled so the largest class spans `width` characters.
    pub fn ascii_bars(&self, width: usize) -> String {
        let max = self.class_counts.iter().copied().max().unwrap_or(0).max(1);
        let label_w = (self.class_counts.len() - 1).to_string().len();
        let mut out = String::new();
        for (c, &n) in self.class_counts.iter().enumerate() {
            let len = (n * width + max / 2) / max;
            out.push_str(&format!("{c:>label_w$} | {:<width$} {n}\n", "#".repeat(len)));
        }
        out
    }
}

impl fmt::Display for PredictionHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ascii_bars(50))?;
        write!(
            f,
            "majority class {} ({} of {} votes){}",
            self.majority_class,
            self.class_counts[self.majority_class],
            self.num_votes,
            if self.tie { ", tied" } else { "" }
        )
    }
}

fn num_classes(net: &NeuralNet) -> usize {
    match net.output_dim() {
        1 => 2,
        k => k,
    }
}

/// Classifies `votes` independent random SLOCC images of `state` (each
/// renormalized) and tallies the answers.
pub fn orbit_vote<R: Rng + ?Sized>(
    net: &NeuralNet,
    state: &QuditState,
    votes: usize,
    rng: &mut R,
) -> Result<PredictionHistogram> {
    if votes < 1 {
        return Err(Error::arg("votes must be >= 1"));
    }
    if state.shape().len() != net.input_dim() {
        return Err(Error::arg(format!(
            "state of shape {} does not fit a network with {} inputs",
            state.shape(),
            net.input_dim()
        )));
    }
    let mut counts = vec![0usize; num_classes(net)];
    let mut ws = Workspace::new(net);
    for _ in 0..votes {
        let g = random_slocc(state.shape(), rng);
        let image = apply_slocc(&g, state)?;
        net.forward_ws(image.coords(), &mut ws);
        counts[class_of(ws.output())] += 1;
    }
    PredictionHistogram::from_counts(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntanglementClass {
    Separable,
    BiSeparable,
    W,
    Ghz,
}

impl fmt::Display for EntanglementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntanglementClass::Separable => "Separable",
            EntanglementClass::BiSeparable => "BiSeparable",
            EntanglementClass::W => "W",
            EntanglementClass::Ghz => "GHZ",
        })
    }
}

/// The three trained 2x2x2 classifiers used by [`classify_3qubit`].
#[derive(Clone, Copy, Debug)]
pub struct ThreeQubitNets<'a> {
    /// Class 0 = separable.
    pub separable: &'a NeuralNet,
    /// Class 0 = degenerate, 1 = non-degenerate.
    pub degenerate: &'a NeuralNet,
    /// Class k = rank k + 1.
    pub rank: &'a NeuralNet,
}

/// Decision tree over orbit votes: separable, then non-degenerate (GHZ),
/// then rank 3 (W), otherwise biseparable.
pub fn classify_3qubit<R: Rng + ?Sized>(
    state: &QuditState,
    nets: ThreeQubitNets<'_>,
    votes: usize,
    rng: &mut R,
) -> Result<EntanglementClass> {
    if state.shape() != Shape::new(2, 3)? {
        return Err(Error::arg(format!("expected a 3-qubit state, got shape {}", state.shape())));
    }
    if orbit_vote(nets.separable, state, votes, rng)?.majority_class == 0 {
        return Ok(EntanglementClass::Separable);
    }
    if orbit_vote(nets.degenerate, state, votes, rng)?.majority_class == 1 {
        return Ok(EntanglementClass::Ghz);
    }
    if orbit_vote(nets.rank, state, votes, rng)?.majority_class == 2 {
        return Ok(EntanglementClass::W);
    }
    Ok(EntanglementClass::BiSeparable)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    pub name: &'static str,
    pub state: QuditState,
}

fn named(name: &'static str, d: usize, n: usize, terms: &[(&str, f64)]) -> NamedState {
    let state = QuditState::from_kets(Shape::new(d, n).unwrap(), terms)
        .and_then(|s| s.normalized())
        .expect("fixture kets are valid");
    NamedState { name, state }
}

fn ones(kets: &[&'static str]) -> Vec<(&'static str, f64)> {
    kets.iter().map(|k| (*k, 1.0)).collect()
}

/// Named 3- and 5-qubit states, all unit norm. Names: `Sep3`, `Bisep3`,
/// `BisepA-BC`, `BisepB-CA`, `BisepC-AB`, `W3`, `GHZ3`, `Phi1` (= `GHZ5`),
/// `Phi2`, `Phi3`, `Phi4`, `delta1`, `delta2`, `W5`.
pub fn fixtures() -> Vec<NamedState> {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    vec![
        named("Sep3", 2, 3, &ones(&["000"])),
        named("Bisep3", 2, 3, &ones(&["000", "011"])),
        named("BisepA-BC", 2, 3, &ones(&["100", "111"])),
        named("BisepB-CA", 2, 3, &ones(&["010", "111"])),
        named("BisepC-AB", 2, 3, &ones(&["001", "111"])),
        named("W3", 2, 3, &ones(&["001", "010", "100"])),
        named("GHZ3", 2, 3, &ones(&["000", "111"])),
        named("Phi1", 2, 5, &ones(&["00000", "11111"])),
        named("Phi2", 2, 5, &ones(&["11111", "11100", "00010", "00001"])),
        named(
            "Phi3",
            2,
            5,
            &[("11111", s2), ("11000", 1.0), ("00100", 1.0), ("00010", 1.0), ("00001", 1.0)],
        ),
        named(
            "Phi4",
            2,
            5,
            &[
                ("11111", s3),
                ("10000", 1.0),
                ("01000", 1.0),
                ("00100", 1.0),
                ("00010", 1.0),
                ("00001", 1.0),
            ],
        ),
        named(
            "delta1",
            2,
            5,
            &[
                ("00000", 1.0),
                ("00011", s3),
                ("00100", 1.0),
                ("01000", 1.0),
                ("01001", 1.0),
                ("01111", s2),
                ("10001", 1.0),
                ("10110", 1.0),
                ("11000", 1.0),
                ("11011", 1.0),
                ("11101", 1.0),
            ],
        ),
        named(
            "delta2",
            2,
            5,
            &[
                ("00000", 1.0),
                ("00100", 1.0),
                ("00111", 1.0),
                ("01010", 1.0),
                ("01101", -1.0),
                ("10001", 1.0),
                ("10011", 1.0),
                ("10111", 1.0),
                ("11000", -1.0),
                ("11110", 1.0),
            ],
        ),
        named("W5", 2, 5, &ones(&["00001", "00010", "00100", "01000", "10000"])),
    ]
}

/// Looks up a fixture by name (case-insensitive); `GHZ5` is an alias of `Phi1`.
pub fn fixture(name: &str) -> Result<QuditState> {
    let key = if name.eq_ignore_ascii_case("GHZ5") { "Phi1" } else { name };
    fixtures()
        .into_iter()
        .find(|f| f.name.eq_ignore_ascii_case(key))
        .map(|f| f.state)
        .ok_or_else(|| Error::arg(format!("unknown state {name:?}")))
}
