//! Discrete signed measures on `R^d`.
//!
//! A [`SignedMeasure`] is a finite list of weighted Dirac masses kept in a
//! canonical form: no two atoms share a bit-identical position, no atom has a
//! zero weight, and atoms are sorted lexicographically by position. Every
//! constructor funnels through [`SignedMeasure::canonicalize`], so two
//! measures compare equal exactly when they describe the same measure.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("non-finite value in measure data")]
    NonFinite,
    #[error("negative weight {0} where a positive measure is required")]
    NegativeWeight(f64),
}

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

/// A weighted Dirac mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub position: Point,
    pub weight: f64,
}

impl Atom {
    pub fn new(position: impl Into<Point>, weight: f64) -> Self {
        Atom {
            position: position.into(),
            weight,
        }
    }
}

/// Euclidean norm of a coordinate slice.
pub fn norm(x: &[f64]) -> f64 {
    if x.len() == 1 {
        return x[0].abs();
    }
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Euclidean distance between two coordinate slices of equal length.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn lex_cmp(x: &[f64], y: &[f64]) -> Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.total_cmp(b) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Finite signed atomic measure in canonical form.
///
/// Positions are stored flat (`len * dim` coordinates) to keep the particle
/// states produced by the dynamics compact.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasure {
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
}

/// Jordan decomposition `mu = plus - minus` with disjoint supports.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanPair {
    pub plus: SignedMeasure,
    pub minus: SignedMeasure,
}

impl SignedMeasure {
    /// The zero measure.
    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        SignedMeasure {
            dim,
            positions: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Single weighted Dirac mass.
    pub fn dirac(position: &[f64], weight: f64) -> Result<Self, MeasureError> {
        Self::from_flat(position.len(), position.to_vec(), vec![weight])
    }

    /// Merges coincident atoms, drops zero weights and sorts atoms by position.
    pub fn canonicalize(raw: Vec<Atom>, dim: usize) -> Result<Self, MeasureError> {
        if dim == 0 {
            return Err(MeasureError::ZeroDimension);
        }
        let mut positions = Vec::with_capacity(raw.len() * dim);
        let mut weights = Vec::with_capacity(raw.len());
        for atom in raw {
            if atom.position.dim() != dim {
                return Err(MeasureError::DimensionMismatch {
                    expected: dim,
                    found: atom.position.dim(),
                });
            }
            positions.extend_from_slice(atom.position.coords());
            weights.push(atom.weight);
        }
        Self::from_flat(dim, positions, weights)
    }

    /// Canonicalizes flat storage: `positions.len() == dim * weights.len()`.
    pub fn from_flat(
        dim: usize,
        mut positions: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if dim == 0 {
            return Err(MeasureError::ZeroDimension);
        }
        if positions.len() != dim * weights.len() {
            return Err(MeasureError::DimensionMismatch {
                expected: dim * weights.len(),
                found: positions.len(),
            });
        }
        if !positions.iter().chain(&weights).all(|v| v.is_finite()) {
            return Err(MeasureError::NonFinite);
        }
        // -0.0 and 0.0 are the same point.
        for c in positions.iter_mut() {
            if *c == 0.0 {
                *c = 0.0;
            }
        }

        let n = weights.len();
        let already_sorted = (1..n).all(|i| {
            lex_cmp(
                &positions[(i - 1) * dim..i * dim],
                &positions[i * dim..(i + 1) * dim],
            ) == Ordering::Less
        });
        if already_sorted && weights.iter().all(|w| *w != 0.0) {
            return Ok(SignedMeasure {
                dim,
                positions,
                weights,
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            lex_cmp(
                &positions[i * dim..(i + 1) * dim],
                &positions[j * dim..(j + 1) * dim],
            )
        });

        let mut out_pos = Vec::with_capacity(positions.len());
        let mut out_w: Vec<f64> = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let head = &positions[order[start] * dim..(order[start] + 1) * dim];
            let mut end = start + 1;
            let mut w = weights[order[start]];
            while end < n
                && lex_cmp(head, &positions[order[end] * dim..(order[end] + 1) * dim])
                    == Ordering::Equal
            {
                w += weights[order[end]];
                end += 1;
            }
            if w != 0.0 {
                out_pos.extend_from_slice(head);
                out_w.push(w);
            }
            start = end;
        }
        Ok(SignedMeasure {
            dim,
            positions: out_pos,
            weights: out_w,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn flat_positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.positions
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn to_atoms(&self) -> Vec<Atom> {
        self.atoms()
            .map(|(x, w)| Atom::new(x.to_vec(), w))
            .collect()
    }

    /// True when every weight is strictly positive (the empty measure included).
    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }

    pub fn jordan(&self) -> JordanPair {
        let split = |keep_positive: bool| {
            let mut pos = Vec::new();
            let mut w = Vec::new();
            for (x, wi) in self.atoms() {
                if (wi > 0.0) == keep_positive {
                    pos.extend_from_slice(x);
                    w.push(wi.abs());
                }
            }
            SignedMeasure {
                dim: self.dim,
                positions: pos,
                weights: w,
            }
        };
        JordanPair {
            plus: split(true),
            minus: split(false),
        }
    }

    /// Total variation `|mu| = |mu_+| + |mu_-|`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Signed total `mu(R^d)`.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest Euclidean norm among atom positions; 0 for the empty measure.
    pub fn support_radius(&self) -> f64 {
        self.positions
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// Relocates every atom through `map` (which writes the image of its first
    /// argument into its second) and re-canonicalizes.
    pub fn push_forward<F>(&self, mut map: F) -> Result<SignedMeasure, MeasureError>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut out = vec![0.0; self.positions.len()];
        for (x, y) in self
            .positions
            .chunks_exact(self.dim)
            .zip(out.chunks_exact_mut(self.dim))
        {
            map(x, y);
        }
        SignedMeasure::from_flat(self.dim, out, self.weights.clone())
    }

    /// Largest common measure of two positive measures: positionwise minimum.
    pub fn common_measure(&self, other: &SignedMeasure) -> Result<SignedMeasure, MeasureError> {
        self.check_dim(other)?;
        for w in self.weights.iter().chain(&other.weights) {
            if *w < 0.0 {
                return Err(MeasureError::NegativeWeight(*w));
            }
        }
        let (mut i, mut j) = (0, 0);
        let mut pos = Vec::new();
        let mut w = Vec::new();
        while i < self.len() && j < other.len() {
            match lex_cmp(self.position(i), other.position(j)) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    pos.extend_from_slice(self.position(i));
                    w.push(self.weights[i].min(other.weights[j]));
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(SignedMeasure {
            dim: self.dim,
            positions: pos,
            weights: w,
        })
    }

    /// Drops atoms whose weight magnitude is below `threshold`.
    pub fn pruned(&self, threshold: f64) -> SignedMeasure {
        if self.weights.iter().all(|w| w.abs() >= threshold) {
            return self.clone();
        }
        let mut pos = Vec::with_capacity(self.positions.len());
        let mut w = Vec::with_capacity(self.len());
        for (x, wi) in self.atoms() {
            if wi.abs() >= threshold {
                pos.extend_from_slice(x);
                w.push(wi);
            }
        }
        SignedMeasure {
            dim: self.dim,
            positions: pos,
            weights: w,
        }
    }

    /// `alpha * self`, canonical.
    pub fn scale(&self, alpha: f64) -> SignedMeasure {
        if alpha == 0.0 {
            return SignedMeasure::empty(self.dim);
        }
        SignedMeasure::from_flat(
            self.dim,
            self.positions.clone(),
            self.weights.iter().map(|w| alpha * w).collect(),
        )
        .expect("scaling a canonical measure by a finite factor stays valid")
    }

    pub fn add(&self, other: &SignedMeasure) -> Result<SignedMeasure, MeasureError> {
        linear_combine(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &SignedMeasure) -> Result<SignedMeasure, MeasureError> {
        linear_combine(1.0, self, -1.0, other)
    }

    /// Weight of the atom at exactly `x`, or 0.
    pub fn weight_at(&self, x: &[f64]) -> f64 {
        let mut lo = 0;
        let mut hi = self.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match lex_cmp(self.position(mid), x) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return self.weights[mid],
            }
        }
        0.0
    }

    /// Integral of a test function against the measure.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Deterministic total order used to orient symmetric computations.
    pub fn total_cmp(&self, other: &SignedMeasure) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.len().cmp(&other.len()))
            .then_with(|| lex_cmp(&self.positions, &other.positions))
            .then_with(|| lex_cmp(&self.weights, &other.weights))
    }

    pub(crate) fn check_dim(&self, other: &SignedMeasure) -> Result<(), MeasureError> {
        if self.dim != other.dim {
            return Err(MeasureError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// `alpha * mu + beta * nu`, canonical.
pub fn linear_combine(
    alpha: f64,
    mu: &SignedMeasure,
    beta: f64,
    nu: &SignedMeasure,
) -> Result<SignedMeasure, MeasureError> {
    mu.check_dim(nu)?;
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(MeasureError::NonFinite);
    }
    let dim = mu.dim;
    let mut pos = Vec::with_capacity(mu.positions.len() + nu.positions.len());
    let mut w = Vec::with_capacity(mu.len() + nu.len());
    let (mut i, mut j) = (0, 0);
    // Both inputs are sorted, so a merge keeps the result sorted.
    while i < mu.len() || j < nu.len() {
        let ord = if i == mu.len() {
            Ordering::Greater
        } else if j == nu.len() {
            Ordering::Less
        } else {
            lex_cmp(mu.position(i), nu.position(j))
        };
        let (x, wi) = match ord {
            Ordering::Less => {
                i += 1;
                (mu.position(i - 1), alpha * mu.weights[i - 1])
            }
            Ordering::Greater => {
                j += 1;
                (nu.position(j - 1), beta * nu.weights[j - 1])
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
                (
                    mu.position(i - 1),
                    alpha * mu.weights[i - 1] + beta * nu.weights[j - 1],
                )
            }
        };
        if !wi.is_finite() {
            return Err(MeasureError::NonFinite);
        }
        if wi != 0.0 {
            pos.extend_from_slice(x);
            w.push(wi);
        }
    }
    Ok(SignedMeasure {
        dim,
        positions: pos,
        weights: w,
    })
}

#[derive(Serialize, Deserialize)]
struct WireAtom {
    x: Vec<f64>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireMeasure {
    dim: usize,
    atoms: Vec<WireAtom>,
}

impl Serialize for SignedMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        WireMeasure {
            dim: self.dim,
            atoms: self
                .atoms()
                .map(|(x, w)| WireAtom { x: x.to_vec(), w })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SignedMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = WireMeasure::deserialize(deserializer)?;
        let atoms = wire
            .atoms
            .into_iter()
            .map(|a| Atom::new(a.x, a.w))
            .collect();
        SignedMeasure::canonicalize(atoms, wire.dim).map_err(serde::de::Error::custom)
    }
}
