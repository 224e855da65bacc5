//! Seeded generators for every labeled class, the SLOCC group action, and
//! dataset construction.
//!
//! Randomness is counter-based: each sample is drawn from its own ChaCha8
//! stream keyed by `(seed, split)` with the sample index as the stream id, so
//! any sample can be regenerated in isolation and generation order never
//! affects the output.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{hamming_mask, hyperdet222, norm2, QuditState, Shape};

/// Draws with `|det| < SL_REJECT_DET` are redrawn before rescaling to SL(d).
pub const SL_REJECT_DET: f64 = 1e-6;

/// Masked (degenerate) or summed (rank) states with norm below this are redrawn.
pub const RESIDUAL_NORM_FLOOR: f64 = 1e-6;

/// Independent RNG for `(seed, stream, index)`.
pub fn substream(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform point on the unit sphere in `ℝ^dim` (normalized Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1, "random_unit_vector: dim must be >= 1");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm2(&v);
        if norm > 1e-150 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Tensor product of `n` independent uniform unit vectors.
pub fn sample_separable<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> QuditState {
    let factors: Vec<Vec<f64>> = (0..shape.n())
        .map(|_| random_unit_vector(shape.d(), rng))
        .collect();
    let mut st = QuditState::product(shape, &factors).expect("factor shapes match");
    st.normalize_in_place().expect("product of unit vectors is nonzero");
    st
}

/// Uniform unit vector in the full `dⁿ`-dimensional space.
pub fn sample_generic<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> QuditState {
    QuditState::new(shape, random_unit_vector(shape.len(), rng)).expect("length matches")
}

/// An element of `SL(d,ℝ)^{×n}` acting mode-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct SloccElement {
    d: usize,
    factors: Vec<Vec<f64>>,
}

impl SloccElement {
    pub fn identity(shape: Shape) -> Self {
        SloccElement {
            d: shape.d(),
            factors: vec![linalg::identity(shape.d()); shape.n()],
        }
    }

    /// Wraps row-major `d×d` factors, checking each has determinant 1 within 1e-10.
    pub fn from_factors(d: usize, factors: Vec<Vec<f64>>) -> Result<Self> {
        for (k, f) in factors.iter().enumerate() {
            if f.len() != d * d {
                return Err(Error::arg(format!("factor {k} is not {d}x{d}")));
            }
            let det = linalg::determinant(f, d);
            if (det - 1.0).abs() > 1e-10 {
                return Err(Error::arg(format!("factor {k} has determinant {det}")));
            }
        }
        Ok(SloccElement { d, factors })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    /// Factor-wise inverse.
    pub fn inverse(&self) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|f| linalg::inverse(f, self.d))
            .collect::<Result<Vec<_>>>()?;
        Ok(SloccElement { d: self.d, factors })
    }

    /// `(A₁ ⊗ … ⊗ Aₙ)·ψ` without renormalizing.
    pub fn act(&self, state: &QuditState) -> Result<QuditState> {
        let shape = state.shape();
        if shape.d() != self.d || shape.n() != self.factors.len() {
            return Err(Error::arg(format!(
                "SLOCC element for {}x{} cannot act on shape {shape}",
                self.d,
                self.factors.len()
            )));
        }
        let d = self.d;
        let n = shape.n();
        let mut out = state.clone();
        let coords = out.coords_mut();
        let mut fiber = vec![0.0; d];
        for (mode, a) in self.factors.iter().enumerate() {
            let lo_size = d.pow((n - 1 - mode) as u32);
            let block = lo_size * d;
            for hi in (0..coords.len()).step_by(block) {
                for lo in 0..lo_size {
                    for (i, f) in fiber.iter_mut().enumerate() {
                        *f = coords[hi + i * lo_size + lo];
                    }
                    for row in 0..d {
                        coords[hi + row * lo_size + lo] = a[row * d..(row + 1) * d]
                            .iter()
                            .zip(&fiber)
                            .map(|(x, y)| x * y)
                            .sum();
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Draws one `SL(d,ℝ)` matrix: i.i.d. standard normal entries, redraw while
/// `|det| < 1e-6`, scale by `|det|^(-1/d)`, negate the first column if the
/// determinant was negative. Returns the matrix and the number of redraws.
pub fn random_sl<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (Vec<f64>, usize) {
    let mut rejected = 0;
    loop {
        let mut m: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
        let det = linalg::determinant(&m, d);
        if det.abs() < SL_REJECT_DET {
            rejected += 1;
            continue;
        }
        let scale = det.abs().powf(-1.0 / d as f64);
        m.iter_mut().for_each(|x| *x *= scale);
        if det < 0.0 {
            for row in 0..d {
                m[row * d] = -m[row * d];
            }
        }
        return (m, rejected);
    }
}

pub fn random_slocc<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> SloccElement {
    random_slocc_counted(shape, rng).0
}

/// Like [`random_slocc`], also reporting the largest per-factor redraw count.
pub fn random_slocc_counted<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> (SloccElement, usize) {
    let mut worst = 0;
    let factors = (0..shape.n())
        .map(|_| {
            let (m, r) = random_sl(shape.d(), rng);
            worst = worst.max(r);
            m
        })
        .collect();
    (
        SloccElement {
            d: shape.d(),
            factors,
        },
        worst,
    )
}

/// Applies `g` mode-wise and renormalizes to unit norm.
pub fn apply_slocc(g: &SloccElement, state: &QuditState) -> Result<QuditState> {
    let mut out = g.act(state)?;
    out.normalize_in_place()?;
    Ok(out)
}

/// Random point on the SLOCC orbit of `state`, renormalized.
pub fn sample_orbit<R: Rng + ?Sized>(state: &QuditState, rng: &mut R) -> Result<QuditState> {
    let g = random_slocc(state.shape(), rng);
    apply_slocc(&g, state)
}

/// Generic unit state with every coordinate within Hamming distance 1 of
/// `0…0` set to zero, renormalized. This is the pre-SLOCC half of
/// [`sample_degenerate`].
pub fn sample_masked<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> QuditState {
    let mask = hamming_mask(shape, 0, 1).expect("index 0 is in range");
    loop {
        let mut st = sample_generic(shape, rng);
        for &i in &mask {
            st.coords_mut()[i] = 0.0;
        }
        if st.norm() < RESIDUAL_NORM_FLOOR {
            continue;
        }
        st.normalize_in_place().expect("norm checked");
        return st;
    }
}

/// Uniformly parameterized degenerate state: masked generic state moved by a
/// random SLOCC element.
pub fn sample_degenerate<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> QuditState {
    let base = sample_masked(shape, rng);
    sample_orbit(&base, rng).expect("SL action on a nonzero state is nonzero")
}

/// Normalized sum of `r` independent separable samples (border rank ≤ r).
pub fn sample_rank_sum<R: Rng + ?Sized>(shape: Shape, r: usize, rng: &mut R) -> QuditState {
    assert!(r >= 1, "sample_rank_sum: r must be >= 1");
    loop {
        let mut acc = sample_separable(shape, rng);
        for _ in 1..r {
            let next = sample_separable(shape, rng);
            acc.coords_mut()
                .iter_mut()
                .zip(next.coords())
                .for_each(|(a, b)| *a += b);
        }
        if acc.norm() < RESIDUAL_NORM_FLOOR {
            continue;
        }
        acc.normalize_in_place().expect("norm checked");
        return acc;
    }
}

/// Named 3-qubit normal forms used as SLOCC-orbit seeds.
pub mod normal_forms {
    use crate::tensor::{QuditState, Shape};

    fn three(terms: &[&str]) -> QuditState {
        let shape = Shape::new(2, 3).unwrap();
        let t: Vec<(&str, f64)> = terms.iter().map(|l| (*l, 1.0)).collect();
        QuditState::from_kets(shape, &t).unwrap().normalized().unwrap()
    }

    pub fn ghz3() -> QuditState {
        three(&["000", "111"])
    }

    pub fn w3() -> QuditState {
        three(&["001", "010", "100"])
    }

    /// The three biseparable normal forms: C-AB, B-CA, A-BC.
    pub fn biseparable3() -> [QuditState; 3] {
        [
            three(&["001", "111"]),
            three(&["010", "111"]),
            three(&["100", "111"]),
        ]
    }
}

/// Labeled-data recipes. Labels:
/// - separability: 0 = separable, 1 = entangled;
/// - degeneracy: 0 = degenerate, 1 = non-degenerate;
/// - rank: class `k` holds rank (or border rank) `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Recipe {
    SeparableVsEntangled,
    DegenerateVsNondegenerate,
    Rank3Qubit,
    BorderRank4,
    BorderRank5,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::SeparableVsEntangled,
        Recipe::DegenerateVsNondegenerate,
        Recipe::Rank3Qubit,
        Recipe::BorderRank4,
        Recipe::BorderRank5,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Recipe::SeparableVsEntangled => "separable-vs-entangled",
            Recipe::DegenerateVsNondegenerate => "degenerate-vs-nondegenerate",
            Recipe::Rank3Qubit => "rank-3qubit",
            Recipe::BorderRank4 => "borderrank-2^4",
            Recipe::BorderRank5 => "borderrank-2^5",
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Recipe::SeparableVsEntangled | Recipe::DegenerateVsNondegenerate => 2,
            Recipe::Rank3Qubit => 3,
            Recipe::BorderRank4 => 4,
            Recipe::BorderRank5 => 5,
        }
    }

    /// Shape the recipe is tied to, if any.
    pub fn required_shape(&self) -> Option<Shape> {
        match self {
            Recipe::Rank3Qubit => Some(Shape::new(2, 3).unwrap()),
            Recipe::BorderRank4 => Some(Shape::new(2, 4).unwrap()),
            Recipe::BorderRank5 => Some(Shape::new(2, 5).unwrap()),
            _ => None,
        }
    }

    pub fn check_shape(&self, shape: Shape) -> Result<()> {
        match self.required_shape() {
            Some(s) if s != shape => Err(Error::arg(format!(
                "recipe {} requires shape {s}, got {shape}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    /// One sample of class `label`.
    pub fn sample<R: Rng + ?Sized>(&self, shape: Shape, label: usize, rng: &mut R) -> QuditState {
        assert!(label < self.num_classes(), "label out of range");
        match (self, label) {
            (Recipe::SeparableVsEntangled, 0) => sample_separable(shape, rng),
            (Recipe::SeparableVsEntangled, _) => sample_generic(shape, rng),
            (Recipe::DegenerateVsNondegenerate, 0) => sample_degenerate(shape, rng),
            (Recipe::DegenerateVsNondegenerate, _) => sample_generic(shape, rng),
            (Recipe::Rank3Qubit, 0) => sample_separable(shape, rng),
            (Recipe::Rank3Qubit, 1) => {
                if rng.random::<bool>() {
                    sample_rank_sum_where(shape, 2, rng, |d| d > 0.0)
                } else {
                    let forms = normal_forms::biseparable3();
                    let pick = rng.random_range(0..forms.len());
                    sample_orbit(&forms[pick], rng).expect("nonzero seed")
                }
            }
            (Recipe::Rank3Qubit, _) => {
                if rng.random::<bool>() {
                    sample_rank_sum_where(shape, 3, rng, |d| d < 0.0)
                } else {
                    sample_orbit(&normal_forms::w3(), rng).expect("nonzero seed")
                }
            }
            (Recipe::BorderRank4 | Recipe::BorderRank5, k) => sample_rank_sum(shape, k + 1, rng),
        }
    }
}

/// Rank-sum samples of shape 2x3 redrawn until the hyperdeterminant passes `accept`.
fn sample_rank_sum_where<R: Rng + ?Sized>(
    shape: Shape,
    r: usize,
    rng: &mut R,
    accept: impl Fn(f64) -> bool,
) -> QuditState {
    loop {
        let st = sample_rank_sum(shape, r, rng);
        if accept(hyperdet222(&st).expect("rank recipe is 2x3")) {
            return st;
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown recipe {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: QuditState,
    pub label: usize,
}

/// Where a dataset came from: enough to regenerate it bit for bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub recipe: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    shape: Shape,
    samples: Vec<Sample>,
    num_classes: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        shape: Shape,
        samples: Vec<Sample>,
        num_classes: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if num_classes < 1 {
            return Err(Error::arg("dataset needs at least one class"));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.state.shape() != shape {
                return Err(Error::arg(format!("sample {i} has shape {}", s.state.shape())));
            }
            if s.label >= num_classes {
                return Err(Error::arg(format!(
                    "sample {i} label {} outside 0..{num_classes}",
                    s.label
                )));
            }
        }
        Ok(Dataset {
            shape,
            samples,
            num_classes,
            provenance,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn new(train: usize, val: usize, test: usize) -> Self {
        SplitSizes { train, val, test }
    }

    /// Every split multiplied by `factor` and rounded to the nearest integer.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |x: usize| (x as f64 * factor).round() as usize;
        SplitSizes::new(s(self.train), s(self.val), s(self.test))
    }
}

/// Builds train/validation/test splits for `recipe`. Sample `i` of a split
/// has label `i mod k`, so classes are balanced to within one sample; split
/// `j` draws from RNG stream `j`, so the three splits never share randomness.
pub fn build_dataset(
    recipe: Recipe,
    shape: Shape,
    sizes: SplitSizes,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    recipe.check_shape(shape)?;
    let split = |stream: u64, len: usize| {
        let samples = (0..len)
            .map(|i| {
                let label = i % recipe.num_classes();
                let mut rng = substream(seed, stream, i as u64);
                Sample {
                    state: recipe.sample(shape, label, &mut rng),
                    label,
                }
            })
            .collect();
        Dataset::new(
            shape,
            samples,
            recipe.num_classes(),
            Provenance {
                seed,
                recipe: recipe.name().to_string(),
            },
        )
    };
    Ok((split(0, sizes.train)?, split(1, sizes.val)?, split(2, sizes.test)?))
}
