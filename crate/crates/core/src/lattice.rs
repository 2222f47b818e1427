//! Lattices, motifs, periodic and finite point sets.
//!
//! A [`Lattice`] stores its basis vectors as the *columns* of an `n×n` matrix.
//! Motif points are kept in fractional coordinates of that basis, wrapped into
//! the half-open unit cube `[0,1)ⁿ`. Lengths are in Å throughout the crate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative threshold for rejecting singular bases and degenerate cells.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("basis must be a non-empty square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("basis contains a non-finite entry")]
    NonFinite,
    #[error("basis is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("cell length {name} = {value} must be positive")]
    NonPositiveLength { name: &'static str, value: f64 },
    #[error("cell angle {name} = {value} degrees lies outside (0, 180)")]
    AngleOutOfRange { name: &'static str, value: f64 },
    #[error("cell parameters describe a degenerate volume (volume factor {factor:e})")]
    DegenerateVolume { factor: f64 },
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("fractional coordinate {value} of point {index} lies outside [0,1)")]
    CoordinateOutOfCell { index: usize, value: f64 },
    #[error("motif points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("a motif needs at least one point")]
    EmptyMotif,
    #[error("a finite set needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// Wraps a fractional coordinate into `[0,1)`; exact `1.0` maps to `0.0`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2π/n · V_{n-2}
    let mut even = 1.0;
    let mut odd = 2.0;
    if n == 0 {
        return even;
    }
    for d in 2..=n {
        if d % 2 == 0 {
            even *= 2.0 * std::f64::consts::PI / d as f64;
        } else {
            odd *= 2.0 * std::f64::consts::PI / d as f64;
        }
    }
    if n.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// A lattice given by `n` linearly independent basis vectors (matrix columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Lattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self, LatticeError> {
        let (rows, cols) = basis.shape();
        if rows != cols || rows == 0 {
            return Err(LatticeError::NotSquare { rows, cols });
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        let det = basis.determinant();
        let scale = basis.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if det.abs() <= DEGENERACY_TOL * scale.powi(rows as i32) || det == 0.0 {
            return Err(LatticeError::Singular { det });
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or(LatticeError::Singular { det })?;
        Ok(Lattice { basis, inverse })
    }

    /// Builds a lattice from a list of basis vectors.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self, LatticeError> {
        let n = vectors.len();
        if n == 0 {
            return Err(LatticeError::NotSquare { rows: 0, cols: 0 });
        }
        for v in vectors {
            if v.len() != n {
                return Err(LatticeError::NotSquare { rows: v.len(), cols: n });
            }
        }
        Lattice::new(DMatrix::from_fn(n, n, |r, c| vectors[c][r]))
    }

    pub fn identity(n: usize) -> Self {
        Lattice::new(DMatrix::identity(n, n)).expect("identity basis is regular")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// The `i`-th basis vector.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.basis.column(i).iter().copied().collect()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    /// Cartesian lattice vector `Σ cᵢ vᵢ` for integer coefficients.
    pub fn lattice_vector(&self, coeffs: &[i64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, &k) in coeffs.iter().enumerate() {
                s += self.basis[(r, c)] * k as f64;
            }
            *o = s;
        }
        out
    }

    pub fn to_cartesian(&self, frac: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, &f) in frac.iter().enumerate() {
                s += self.basis[(r, c)] * f;
            }
            *o = s;
        }
        out
    }

    pub fn to_fractional(&self, cart: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, &x) in cart.iter().enumerate() {
                s += self.inverse[(r, c)] * x;
            }
            *o = s;
        }
        out
    }

    pub fn volume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// Distances between opposite facets of the unit cell.
    ///
    /// The height over the facet spanned by all vectors except `vₜ` equals
    /// `1/|rₜ|` where `rₜ` is the `t`-th row of the inverse basis.
    pub fn heights(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|t| 1.0 / self.inverse.row(t).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    pub fn min_height(&self) -> f64 {
        self.heights().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Returns the lattice with every basis vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, LatticeError> {
        Lattice::new(&self.basis * factor)
    }

    /// Applies a linear map (e.g. a rotation) to the basis.
    pub fn transformed(&self, map: &DMatrix<f64>) -> Result<Self, LatticeError> {
        Lattice::new(map * &self.basis)
    }

    pub fn metrics(&self) -> CellMetrics {
        cell_metrics(self)
    }
}

/// Volume, longest-diagonal diameter and skewness of a unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub volume: f64,
    pub diameter: f64,
    pub skewness: f64,
}

/// Computes `(volume, diameter, skewness)`; the diameter is the longest of
/// the `2ⁿ⁻¹` cell diagonals `v₁ ± v₂ ± … ± vₙ`.
pub fn cell_metrics(lattice: &Lattice) -> CellMetrics {
    let n = lattice.dim();
    let vectors = lattice.vectors();
    let mut diameter = 0.0_f64;
    for signs in 0u64..(1u64 << (n - 1)) {
        let mut diag = vectors[0].clone();
        for (i, v) in vectors.iter().enumerate().skip(1) {
            let s = if signs >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
            for (d, x) in diag.iter_mut().zip(v) {
                *d += s * x;
            }
        }
        diameter = diameter.max(norm(&diag));
    }
    let volume = lattice.volume();
    CellMetrics {
        volume,
        diameter,
        skewness: diameter / volume.powf(1.0 / n as f64),
    }
}

/// Converts the six conventional cell parameters (lengths in Å, angles in
/// degrees) to a basis: `a` along x, `b` in the xy-plane, right-handed.
pub fn cell_from_parameters(
    a: f64,
    b: f64,
    c: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Lattice, LatticeError> {
    for (name, value) in [("a", a), ("b", b), ("c", c)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(LatticeError::NonPositiveLength { name, value });
        }
    }
    let (ca, cb, cg) = (
        alpha.to_radians().cos(),
        beta.to_radians().cos(),
        gamma.to_radians().cos(),
    );
    let factor = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
    // volume = abc·√factor; reject when below the relative threshold
    let largest = a.max(b).max(c);
    if factor.is_nan() || factor <= 0.0 || a * b * c * factor.sqrt() <= DEGENERACY_TOL * largest.powi(3) {
        return Err(LatticeError::DegenerateVolume { factor });
    }
    for (name, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(value > 0.0 && value < 180.0) {
            return Err(LatticeError::AngleOutOfRange { name, value });
        }
    }
    let sg = gamma.to_radians().sin();
    let cx = c * cb;
    let cy = c * (ca - cb * cg) / sg;
    let cz = (c * c - cx * cx - cy * cy).max(0.0).sqrt();
    Lattice::from_vectors(&[
        vec![a, 0.0, 0.0],
        vec![b * cg, b * sg, 0.0],
        vec![cx, cy, cz],
    ])
}

/// A finite motif in fractional coordinates, each in `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    points: Vec<Vec<f64>>,
}

impl Motif {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, LatticeError> {
        if points.is_empty() {
            return Err(LatticeError::EmptyMotif);
        }
        let n = points[0].len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(LatticeError::DimensionMismatch { expected: n, found: p.len() });
            }
            if let Some(&value) = p.iter().find(|x| !(**x >= 0.0 && **x < 1.0)) {
                return Err(LatticeError::CoordinateOutOfCell { index, value });
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(LatticeError::DuplicatePoint { first: j, second: i });
                }
            }
        }
        Ok(Motif { points })
    }

    /// Wraps every coordinate into `[0,1)` before validating.
    pub fn wrapped(points: Vec<Vec<f64>>) -> Result<Self, LatticeError> {
        Motif::new(
            points
                .into_iter()
                .map(|p| p.into_iter().map(wrap_unit).collect())
                .collect(),
        )
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// A periodic point set `Λ + M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSet {
    lattice: Lattice,
    motif: Motif,
    label: Option<String>,
    species: Option<Vec<String>>,
}

impl PeriodicSet {
    pub fn new(lattice: Lattice, motif: Motif) -> Result<Self, LatticeError> {
        if motif.dim() != lattice.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: lattice.dim(),
                found: motif.dim(),
            });
        }
        Ok(PeriodicSet { lattice, motif, label: None, species: None })
    }

    /// Builds a periodic set from Cartesian motif points, wrapping them into the cell.
    pub fn from_cartesian(lattice: Lattice, points: &[Vec<f64>]) -> Result<Self, LatticeError> {
        for p in points {
            if p.len() != lattice.dim() {
                return Err(LatticeError::DimensionMismatch {
                    expected: lattice.dim(),
                    found: p.len(),
                });
            }
        }
        let frac = points.iter().map(|p| lattice.to_fractional(p)).collect();
        let motif = Motif::wrapped(frac)?;
        PeriodicSet::new(lattice, motif)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Attaches per-site labels (e.g. chemical elements). They never affect invariants.
    pub fn with_species(mut self, species: Vec<String>) -> Self {
        debug_assert_eq!(species.len(), self.motif.len());
        self.species = Some(species);
        self
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn motif(&self) -> &Motif {
        &self.motif
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn species(&self) -> Option<&[String]> {
        self.species.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Number of motif points `m`.
    pub fn len(&self) -> usize {
        self.motif.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_cartesian(&self) -> Vec<Vec<f64>> {
        to_cartesian(self)
    }
}

/// Cartesian coordinates `B·p` of every motif point, in motif order.
pub fn to_cartesian(set: &PeriodicSet) -> Vec<Vec<f64>> {
    set.motif.points().iter().map(|p| set.lattice.to_cartesian(p)).collect()
}

/// A finite set of distinct Cartesian points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSet {
    points: Vec<Vec<f64>>,
    label: Option<String>,
}

impl FiniteSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, LatticeError> {
        if points.len() < 2 {
            return Err(LatticeError::TooFewPoints(points.len()));
        }
        let n = points[0].len();
        for p in &points {
            if p.len() != n {
                return Err(LatticeError::DimensionMismatch { expected: n, found: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(LatticeError::NonFinite);
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(LatticeError::DuplicatePoint { first: j, second: i });
                }
            }
        }
        Ok(FiniteSet { points, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Either kind of point set, owned.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Periodic(PeriodicSet),
    Finite(FiniteSet),
}

impl Structure {
    pub fn label(&self) -> Option<&str> {
        match self {
            Structure::Periodic(s) => s.label(),
            Structure::Finite(s) => s.label(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Structure::Periodic(s) => s.dim(),
            Structure::Finite(s) => s.dim(),
        }
    }

    pub fn as_periodic(&self) -> Option<&PeriodicSet> {
        match self {
            Structure::Periodic(s) => Some(s),
            Structure::Finite(_) => None,
        }
    }
}

impl From<PeriodicSet> for Structure {
    fn from(s: PeriodicSet) -> Self {
        Structure::Periodic(s)
    }
}

impl From<FiniteSet> for Structure {
    fn from(s: FiniteSet) -> Self {
        Structure::Finite(s)
    }
}

/// Borrowed view over either kind of point set; accepted by the invariant functions.
#[derive(Debug, Clone, Copy)]
pub enum PointSetRef<'a> {
    Periodic(&'a PeriodicSet),
    Finite(&'a FiniteSet),
}

impl<'a> From<&'a PeriodicSet> for PointSetRef<'a> {
    fn from(s: &'a PeriodicSet) -> Self {
        PointSetRef::Periodic(s)
    }
}

impl<'a> From<&'a FiniteSet> for PointSetRef<'a> {
    fn from(s: &'a FiniteSet) -> Self {
        PointSetRef::Finite(s)
    }
}

impl<'a> From<&'a Structure> for PointSetRef<'a> {
    fn from(s: &'a Structure) -> Self {
        match s {
            Structure::Periodic(p) => PointSetRef::Periodic(p),
            Structure::Finite(f) => PointSetRef::Finite(f),
        }
    }
}
