//! Point clouds as empirical measures, ground costs and dense cost matrices.
//!
//! Every other module consumes [`DiscreteMeasure`] and [`CostMatrix`]. Costs
//! are normalized by the ambient dimension so that values stay comparable
//! across resolutions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `R^D` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("point has no coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point"));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<[f64; 1]> for Point {
    fn from(c: [f64; 1]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c.to_vec())
    }
}

/// Weighted point cloud, possibly with non-unit total mass.
///
/// Coordinates are stored row-major in one flat buffer; `point(i)` borrows
/// the `i`-th atom.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl DiscreteMeasure {
    /// Equal weights `total_mass / N` on each of the `N` points.
    pub fn uniform(points: &[Point], total_mass: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("measure needs at least one atom"));
        }
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(Error::NonPositiveMass(total_mass));
        }
        let w = total_mass / points.len() as f64;
        Self::weighted(points, vec![w; points.len()])
    }

    /// Explicit per-atom weights. Total mass is their sum.
    pub fn weighted(points: &[Point], weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("measure needs at least one atom"));
        }
        if weights.len() != points.len() {
            return Err(Error::ShapeMismatch(format!("{} points but {} weights", points.len(), weights.len())));
        }
        let dim = points[0].dim();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Build from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || weights.is_empty() {
            return Err(Error::EmptyInput("measure needs at least one atom"));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("measure coordinates"));
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::NegativeWeight { index, value });
        }
        let total_mass: f64 = weights.iter().sum();
        if total_mass <= 0.0 {
            return Err(Error::NonPositiveMass(total_mass));
        }
        Ok(DiscreteMeasure { dim, coords, weights, total_mass })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.points().map(|p| Point(p.to_vec())).collect()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// True if every weight equals `total_mass / N` up to `rel_tol`.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let w = self.total_mass / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= rel_tol * w)
    }

    /// Same atoms, unit total mass.
    pub fn normalized(&self) -> DiscreteMeasure {
        let s = self.total_mass;
        DiscreteMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.iter().map(|w| w / s).collect(),
            total_mass: 1.0,
        }
    }

    pub(crate) fn require_probability(&self) -> Result<()> {
        if (self.total_mass - 1.0).abs() > 1e-9 {
            return Err(Error::NonProbabilityMass(self.total_mass));
        }
        Ok(())
    }
}

/// Something that prices moving unit mass from `x` to `y`.
pub trait GroundCost {
    fn cost(&self, x: &[f64], y: &[f64]) -> f64;
}

/// Built-in dimension-normalized costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `(1/D) * sum_d (x_d - y_d)^2`
    #[default]
    SqEuclideanNormalized,
    /// `(1/D) * sum_d |x_d - y_d|`
    L1Normalized,
}

impl CostKind {
    pub fn name(self) -> &'static str {
        match self {
            CostKind::SqEuclideanNormalized => "sq_euclidean_normalized",
            CostKind::L1Normalized => "l1_normalized",
        }
    }

    /// Lipschitz constant of `x -> c(x, y)` in the Euclidean norm, for
    /// `x, y` in a set of the given diameter.
    pub fn lipschitz_on(self, diameter: f64, dim: usize) -> f64 {
        let d = dim as f64;
        match self {
            CostKind::SqEuclideanNormalized => 2.0 * diameter / d,
            CostKind::L1Normalized => d.sqrt() / d,
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sq" | "l2" | "sq_euclidean_normalized" => Ok(CostKind::SqEuclideanNormalized),
            "l1" | "l1_normalized" => Ok(CostKind::L1Normalized),
            other => Err(Error::BadParams(format!("unknown cost kind `{other}`"))),
        }
    }
}

impl GroundCost for CostKind {
    #[inline]
    fn cost(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let d = x.len() as f64;
        let s: f64 = match self {
            CostKind::SqEuclideanNormalized => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            CostKind::L1Normalized => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        };
        s / d
    }
}

/// Dimension-checked cost between two points.
pub fn eval_cost(kind: CostKind, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("point has no coordinates"));
    }
    Ok(kind.cost(x, y))
}

/// Stack points as the rows of an array.
pub fn points_to_array(points: &[Point]) -> Result<Array2<f64>> {
    let dim = points.first().ok_or(Error::EmptyInput("no points"))?.dim();
    let mut flat = Vec::with_capacity(points.len() * dim);
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        flat.extend_from_slice(p.coords());
    }
    Ok(Array2::from_shape_vec((points.len(), dim), flat).expect("shape checked"))
}

/// Rows of `arr` as points. Fails on non-finite entries or zero columns.
pub fn array_to_points(arr: &Array2<f64>) -> Result<Vec<Point>> {
    arr.rows().into_iter().map(|r| Point::new(r.to_vec())).collect()
}

impl DiscreteMeasure {
    /// Support points as the rows of an array.
    pub fn support_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.len(), self.dim()), self.coords().to_vec()).expect("consistent shape")
    }
}

/// Dense row-major `rows x cols` matrix of pairwise costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput("cost matrix"));
        }
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} values for a {rows}x{cols} cost matrix", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost matrix"));
        }
        Ok(CostMatrix { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `C[i][j] = cost(P_i, Q_j)`.
pub fn build_cost_matrix<C: GroundCost + ?Sized>(
    cost: &C,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
) -> Result<CostMatrix> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: source.dim(), found: target.dim() });
    }
    let mut values = Vec::with_capacity(source.len() * target.len());
    for x in source.points() {
        values.extend(target.points().map(|y| cost.cost(x, y)));
    }
    CostMatrix::from_vec(source.len(), target.len(), values)
}
