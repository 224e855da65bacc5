//! Real n-qudit tensors and the exact algebraic oracles on them.
//!
//! Coordinates are indexed by base-`d` digit strings `i₁i₂…iₙ` in row-major
//! order: the leftmost digit is particle 1 and varies slowest. Every
//! flattening below is defined relative to that order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper bound on `dⁿ`; keeps every supported format addressable and far
/// below anything that would need more than a few megabytes per state.
const MAX_LEN: usize = 1 << 24;

/// Relative singular-value threshold used by [`multilinear_rank`].
pub const DEFAULT_RANK_RTOL: f64 = 1e-8;

const SVD_MAX_SWEEPS: usize = 60;

/// Format of an n-qudit system: local dimension `d`, particle count `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    d: usize,
    n: usize,
}

impl Shape {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg(format!("local dimension must be >= 2, got {d}")));
        }
        if n < 1 {
            return Err(Error::arg("particle count must be >= 1"));
        }
        match d.checked_pow(n as u32) {
            Some(len) if len <= MAX_LEN => Ok(Shape { d, n }),
            _ => Err(Error::arg(format!("{d}^{n} coordinates is too large"))),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coordinates, `dⁿ`.
    pub fn len(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Base-`d` digits of a flat index, most significant (particle 1) first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.n {
            return Err(Error::arg(format!(
                "expected {} digits, got {}",
                self.n,
                digits.len()
            )));
        }
        digits.iter().try_fold(0usize, |acc, &dig| {
            if dig >= self.d {
                Err(Error::arg(format!("digit {dig} out of range for d={}", self.d)))
            } else {
                Ok(acc * self.d + dig)
            }
        })
    }

    /// Parses a ket label such as `"0110"` into a flat index.
    pub fn parse_ket(&self, label: &str) -> Result<usize> {
        let digits = label
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|v| v as usize)
                    .ok_or_else(|| Error::arg(format!("bad ket label {label:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.index_of(&digits)
    }

    /// Ket label of a flat index, e.g. `5` in shape 2x3 is `"101"`.
    pub fn ket_label(&self, index: usize) -> String {
        self.digits(index)
            .iter()
            .map(|d| char::from_digit(*d as u32, 10).unwrap_or('?'))
            .collect()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.d, self.n)
    }
}

/// Parses `"<d>x<n>"`, e.g. `"2x3"` for three qubits.
impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (d, n) = s
            .split_once('x')
            .ok_or_else(|| Error::arg(format!("shape must look like <d>x<n>, got {s:?}")))?;
        let d = d
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad local dimension in {s:?}")))?;
        let n = n
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad particle count in {s:?}")))?;
        Shape::new(d, n)
    }
}

/// Coordinate vector of a real pure state. Normalization is explicit: a
/// `QuditState` is not assumed to have unit norm unless produced by
/// [`QuditState::normalized`] or a sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    shape: Shape,
    coords: Vec<f64>,
}

impl QuditState {
    pub fn new(shape: Shape, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != shape.len() {
            return Err(Error::arg(format!(
                "shape {shape} needs {} coordinates, got {}",
                shape.len(),
                coords.len()
            )));
        }
        Ok(QuditState { shape, coords })
    }

    pub fn zeros(shape: Shape) -> Self {
        QuditState {
            shape,
            coords: vec![0.0; shape.len()],
        }
    }

    pub fn basis(shape: Shape, index: usize) -> Result<Self> {
        if index >= shape.len() {
            return Err(Error::arg(format!("basis index {index} out of range")));
        }
        let mut s = Self::zeros(shape);
        s.coords[index] = 1.0;
        Ok(s)
    }

    /// Builds an (unnormalized) superposition from ket labels,
    /// e.g. `[("000", 1.0), ("011", 1.0)]`.
    pub fn from_kets(shape: Shape, terms: &[(&str, f64)]) -> Result<Self> {
        let mut s = Self::zeros(shape);
        for (label, amp) in terms {
            let i = shape.parse_ket(label)?;
            s.coords[i] += amp;
        }
        Ok(s)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.coords)
    }

    /// Unit-norm copy. Fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let mut s = self.clone();
        s.normalize_in_place()?;
        Ok(s)
    }

    pub fn normalize_in_place(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite state".into()));
        }
        self.coords.iter_mut().for_each(|c| *c /= norm);
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        QuditState {
            shape: self.shape,
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    /// Tensor product `v₁ ⊗ v₂ ⊗ … ⊗ vₙ` of local vectors, each of length `d`.
    pub fn product(shape: Shape, factors: &[Vec<f64>]) -> Result<Self> {
        if factors.len() != shape.n() || factors.iter().any(|f| f.len() != shape.d()) {
            return Err(Error::arg(format!(
                "product state for {shape} needs {} factors of length {}",
                shape.n(),
                shape.d()
            )));
        }
        let mut coords = vec![1.0];
        for f in factors {
            coords = coords
                .iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect();
        }
        Ok(QuditState { shape, coords })
    }
}

/// Free function form of [`QuditState::normalized`].
pub fn normalize(state: &QuditState) -> Result<QuditState> {
    state.normalized()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Mode-`k` flattening: a `d × dⁿ⁻¹` matrix whose row index is the `k`-th
/// digit and whose column index enumerates the remaining digits in their
/// original (row-major) order.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatMatrix {
    rows: usize,
    cols: usize,
    mode: usize,
    entries: Vec<f64>,
}

impl FlatMatrix {
    /// Wraps a row-major matrix; `mode` is informational (1-based).
    pub fn from_rows(rows: usize, cols: usize, mode: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::arg(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(FlatMatrix {
            rows,
            cols,
            mode,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }
}

/// Mode-`mode` (1-based) flattening of `state`.
pub fn flatten(state: &QuditState, mode: usize) -> Result<FlatMatrix> {
    let shape = state.shape();
    let (d, n) = (shape.d(), shape.n());
    if mode < 1 || mode > n {
        return Err(Error::arg(format!("mode {mode} out of range 1..={n}")));
    }
    // index = hi·d^(n-mode+1) + a·d^(n-mode) + lo ; column = hi·d^(n-mode) + lo
    let lo_size = d.pow((n - mode) as u32);
    let cols = shape.len() / d;
    let mut entries = vec![0.0; d * cols];
    for (idx, &c) in state.coords().iter().enumerate() {
        let lo = idx % lo_size;
        let a = (idx / lo_size) % d;
        let hi = idx / (lo_size * d);
        entries[a * cols + hi * lo_size + lo] = c;
    }
    FlatMatrix::from_rows(d, cols, mode, entries)
}

/// Singular values of `m` in descending order, `min(rows, cols)` of them.
///
/// One-sided Jacobi: pairs of rows are rotated until mutually orthogonal,
/// after which the row norms are the singular values. The matrices here have
/// at most a handful of rows, so this converges in a few sweeps.
pub fn singular_values(m: &FlatMatrix) -> Result<Vec<f64>> {
    if m.entries.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("singular_values: non-finite matrix entry"));
    }
    // Orthogonalize along the shorter dimension.
    let (r, c, mut a) = if m.rows <= m.cols {
        (m.rows, m.cols, m.entries.clone())
    } else {
        let mut t = vec![0.0; m.entries.len()];
        for i in 0..m.rows {
            for j in 0..m.cols {
                t[j * m.rows + i] = m.entries[i * m.cols + j];
            }
        }
        (m.cols, m.rows, t)
    };

    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..r {
            for q in p + 1..r {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..c {
                    let x = a[p * c + k];
                    let y = a[q * c + k];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..c {
                    let x = a[p * c + k];
                    let y = a[q * c + k];
                    a[p * c + k] = cs * x - sn * y;
                    a[q * c + k] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..r).map(|i| norm2(&a[i * c..(i + 1) * c])).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Ranks of all `n` 1-flattenings.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultilinearRank(pub Vec<usize>);

impl MultilinearRank {
    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn is_all_ones(&self) -> bool {
        self.0.iter().all(|&r| r == 1)
    }
}

impl fmt::Display for MultilinearRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Multilinear rank with the default relative threshold: a singular value
/// counts when it exceeds `1e-8 · σ_max` of its flattening.
pub fn multilinear_rank(state: &QuditState) -> Result<MultilinearRank> {
    multilinear_rank_with(state, RankTolerance::Relative(DEFAULT_RANK_RTOL))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankTolerance {
    /// Threshold is this factor times the largest singular value.
    Relative(f64),
    Absolute(f64),
}

pub fn multilinear_rank_with(state: &QuditState, tol: RankTolerance) -> Result<MultilinearRank> {
    let raw = match tol {
        RankTolerance::Relative(t) | RankTolerance::Absolute(t) => t,
    };
    if !(raw > 0.0) {
        return Err(Error::arg("rank tolerance must be positive"));
    }
    let mut ranks = Vec::with_capacity(state.shape().n());
    for mode in 1..=state.shape().n() {
        let sv = singular_values(&flatten(state, mode)?)?;
        let cut = match tol {
            RankTolerance::Relative(t) => t * sv.first().copied().unwrap_or(0.0),
            RankTolerance::Absolute(t) => t,
        };
        ranks.push(sv.iter().filter(|&&s| s > cut).count());
    }
    Ok(MultilinearRank(ranks))
}

/// `φ₀₀φ₁₁ − φ₀₁φ₁₀` for a two-qubit state.
pub fn det2x2(state: &QuditState) -> Result<f64> {
    if state.shape() != Shape::new(2, 2)? {
        return Err(Error::arg(format!(
            "det2x2 needs shape 2x2, got {}",
            state.shape()
        )));
    }
    let x = state.coords();
    Ok(x[0] * x[3] - x[1] * x[2])
}

/// Cayley's 2×2×2 hyperdeterminant, the 12-term quartic evaluated term by term.
pub fn hyperdet222(state: &QuditState) -> Result<f64> {
    if state.shape() != Shape::new(2, 3)? {
        return Err(Error::arg(format!(
            "hyperdet222 needs shape 2x3, got {}",
            state.shape()
        )));
    }
    let c = state.coords();
    let (x000, x001, x010, x011) = (c[0], c[1], c[2], c[3]);
    let (x100, x101, x110, x111) = (c[4], c[5], c[6], c[7]);
    Ok(x000 * x000 * x111 * x111
        + x011 * x011 * x100 * x100
        + x010 * x010 * x101 * x101
        + x001 * x001 * x110 * x110
        - 2.0 * x000 * x011 * x100 * x111
        - 2.0 * x000 * x010 * x101 * x111
        - 2.0 * x000 * x001 * x110 * x111
        + 4.0 * x000 * x011 * x101 * x110
        - 2.0 * x010 * x011 * x100 * x101
        - 2.0 * x001 * x011 * x100 * x110
        - 2.0 * x001 * x010 * x101 * x110
        + 4.0 * x001 * x010 * x100 * x111)
}

/// Flat indices whose digit strings differ from `center` in at most
/// `radius` positions, ascending.
pub fn hamming_mask(shape: Shape, center: usize, radius: usize) -> Result<Vec<usize>> {
    if center >= shape.len() {
        return Err(Error::arg(format!("center index {center} out of range")));
    }
    let c = shape.digits(center);
    Ok((0..shape.len())
        .filter(|&i| {
            shape
                .digits(i)
                .iter()
                .zip(&c)
                .filter(|(a, b)| a != b)
                .count()
                <= radius
        })
        .collect())
}
