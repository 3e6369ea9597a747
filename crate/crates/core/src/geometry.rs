//! Points, datasets, weighted sets and finite metrics.
//!
//! Datasets are multisets: coincident points are stored as separate entries so
//! that nearest-center ties and D² masses treat every copy the same way.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::REL_TOL;

/// Largest dataset materialized point by point. Bigger lower-bound instances
/// are only available in multiplicity-compressed form.
pub const MAX_EXPLICIT_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Point(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Point::new(vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `self + scale * dir`. Panics on dimension mismatch.
    pub fn offset(&self, dir: &[f64], scale: f64) -> Point {
        assert_eq!(self.dim(), dir.len());
        Point(self.0.iter().zip(dir).map(|(a, b)| a + scale * b).collect())
    }
}

/// Squared Euclidean distance between coordinate slices of equal length.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Which power of the Euclidean distance the cost uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// Sum of distances (k-median), exponent 1.
    Median,
    /// Sum of squared distances (k-means), exponent 2.
    Means,
}

impl CostKind {
    pub fn exponent(self) -> u32 {
        match self {
            CostKind::Median => 1,
            CostKind::Means => 2,
        }
    }

    pub fn from_exponent(e: u32) -> Option<Self> {
        match e {
            1 => Some(CostKind::Median),
            2 => Some(CostKind::Means),
            _ => None,
        }
    }

    /// Raise a plain Euclidean distance to this kind's exponent.
    #[inline]
    pub fn apply(self, dist: f64) -> f64 {
        match self {
            CostKind::Median => dist,
            CostKind::Means => dist * dist,
        }
    }

    /// Same as [`apply`](Self::apply) but starting from a squared distance.
    #[inline]
    pub fn from_sq(self, sq: f64) -> f64 {
        match self {
            CostKind::Median => sq.sqrt(),
            CostKind::Means => sq,
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Median => "median",
            CostKind::Means => "means",
        })
    }
}

impl FromStr for CostKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "means" | "kmeans" | "2" => Ok(CostKind::Means),
            "median" | "kmedian" | "1" => Ok(CostKind::Median),
            other => Err(format!("unknown cost kind `{other}` (expected means|median)")),
        }
    }
}

/// Euclidean distance raised to the kind's exponent.
pub fn distance(a: &Point, b: &Point, kind: CostKind) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(kind.from_sq(sq_dist(a.coords(), b.coords())))
}

/// A nonempty multiset of points of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Point>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyDataset)?.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        Ok(Dataset { points, dim })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Dataset::new(rows.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Dataset::new(xs.iter().map(|&x| Point::scalar(x)).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// First coordinate of every point; only meaningful for `dim == 1`.
    pub fn scalars(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        Ok(self.points.iter().map(|p| p.coords()[0]).collect())
    }

    /// The sub-multiset at the given indices.
    pub fn select(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(idx.iter().map(|&i| self.points[i].clone()).collect())
    }

    /// Number of distinct locations (exact coordinate equality).
    pub fn distinct_count(&self) -> usize {
        let mut keys: Vec<Vec<u64>> = self
            .points
            .iter()
            .map(|p| p.coords().iter().map(|c| (c + 0.0).to_bits()).collect())
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.points {
            for (j, &c) in p.coords().iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        (lo, hi)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Points with nonnegative weights; the output form of a coreset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedSet {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        if let Some(first) = points.first() {
            if let Some(p) = points.iter().find(|p| p.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: p.dim(),
                });
            }
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::InvalidWeight { index, value });
        }
        Ok(WeightedSet { points, weights })
    }

    pub fn unit(data: &Dataset) -> Self {
        WeightedSet {
            points: data.points().to_vec(),
            weights: vec![1.0; data.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Why a distance matrix is not a metric.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricViolation {
    #[error("row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({i},{j}) = {value} is negative or not finite")]
    NegativeEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry ({i},{i}) = {value} is not zero")]
    NonZeroDiagonal { i: usize, value: f64 },
    #[error("asymmetry at ({i},{j}): {forward} vs {backward}")]
    Asymmetry {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    #[error("triangle violation: d({i},{k}) = {direct} > d({i},{j}) + d({j},{k}) = {via}")]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },
    #[error("empty matrix")]
    Empty,
}

/// Checks symmetry, zero diagonal, nonnegativity and the triangle inequality
/// (relative tolerance [`REL_TOL`]). Reports the first violation found.
pub fn validate_metric(rows: &[Vec<f64>]) -> std::result::Result<(), MetricViolation> {
    let n = rows.len();
    if n == 0 {
        return Err(MetricViolation::Empty);
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(MetricViolation::NotSquare {
                row,
                len: r.len(),
                n,
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let v = rows[i][j];
            if !(v.is_finite() && v >= 0.0) {
                return Err(MetricViolation::NegativeEntry { i, j, value: v });
            }
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if r[i] != 0.0 {
            return Err(MetricViolation::NonZeroDiagonal { i, value: r[i] });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if (a - b).abs() > REL_TOL * a.max(b) {
                return Err(MetricViolation::Asymmetry {
                    i,
                    j,
                    forward: a,
                    backward: b,
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let direct = rows[i][k];
                let via = rows[i][j] + rows[j][k];
                if direct > via * (1.0 + REL_TOL) {
                    return Err(MetricViolation::Triangle {
                        i,
                        j,
                        k,
                        direct,
                        via,
                    });
                }
            }
        }
    }
    Ok(())
}

/// A validated distance matrix over points `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    n: usize,
    dist: Vec<f64>,
}

impl FiniteMetric {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        validate_metric(&rows)?;
        let n = rows.len();
        Ok(FiniteMetric {
            n,
            dist: rows.into_iter().flatten().collect(),
        })
    }

    /// Pairwise Euclidean distances of a dataset (coincident points allowed).
    pub fn from_dataset(data: &Dataset) -> Self {
        let n = data.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = sq_dist(data.point(i).coords(), data.point(j).coords()).sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        FiniteMetric { n, dist }
    }

    /// The metric where every pair of distinct points is at distance `d`.
    pub fn uniform(n: usize, d: f64) -> Self {
        let mut dist = vec![d; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        FiniteMetric { n, dist }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfBounds {
                index,
                size: self.n,
            })
        }
    }

    /// Largest pairwise distance inside `subset`.
    pub fn diameter(&self, subset: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                best = best.max(self.d(i, j));
            }
        }
        best
    }

    /// Closed ball `{x : d(c, x) <= r}` restricted to `within`, in `within` order.
    pub fn ball(&self, c: usize, r: f64, within: &[usize]) -> Vec<usize> {
        within.iter().copied().filter(|&x| self.d(c, x) <= r).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let (a, b) = (p(&[0.0, 0.0]), p(&[3.0, 4.0]));
        assert_eq!(distance(&a, &b, CostKind::Means).unwrap(), 25.0);
        assert_eq!(distance(&a, &b, CostKind::Median).unwrap(), 5.0);
        assert_eq!(distance(&b, &b, CostKind::Means).unwrap(), 0.0);
        assert!(matches!(
            distance(&a, &p(&[1.0]), CostKind::Means),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_rejects_bad_coordinates() {
        assert!(matches!(Point::new(vec![]), Err(Error::ZeroDimension)));
        assert!(matches!(
            Point::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn dataset_keeps_duplicates() {
        let x = Dataset::from_scalars(&[2.0, 2.0, 2.0, -4.0]).unwrap();
        assert_eq!(x.len(), 4);
        assert_eq!(x.distinct_count(), 2);
        assert!(matches!(Dataset::new(vec![]), Err(Error::EmptyDataset)));
        assert!(Dataset::new(vec![p(&[1.0]), p(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn weighted_set_validation() {
        assert!(WeightedSet::new(vec![p(&[1.0])], vec![]).is_err());
        assert!(matches!(
            WeightedSet::new(vec![p(&[1.0])], vec![-1.0]),
            Err(Error::InvalidWeight { index: 0, .. })
        ));
        let w = WeightedSet::new(vec![p(&[1.0]), p(&[2.0])], vec![0.0, 3.0]).unwrap();
        assert_eq!(w.total_weight(), 3.0);
    }

    #[test]
    fn validate_metric_examples() {
        assert_eq!(validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]]), Ok(()));
        assert!(matches!(
            validate_metric(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(MetricViolation::Asymmetry { i: 0, j: 1, .. })
        ));
        let tri = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(matches!(
            validate_metric(&tri),
            Err(MetricViolation::Triangle {
                i: 0,
                j: 1,
                k: 2,
                ..
            })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(MetricViolation::NegativeEntry { .. })
        ));
        assert!(matches!(
            validate_metric(&[vec![1.0]]),
            Err(MetricViolation::NonZeroDiagonal { i: 0, .. })
        ));
        assert!(matches!(
            validate_metric(&[vec![0.0, 1.0], vec![1.0]]),
            Err(MetricViolation::NotSquare { row: 1, .. })
        ));
    }

    #[test]
    fn uniform_metric_is_valid() {
        let m = FiniteMetric::uniform(5, 1.0);
        assert!(validate_metric(&m.rows()).is_ok());
        assert_eq!(m.diameter(&m.all_indices()), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rows(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, dim), 1..max_n)
        }

        proptest! {
            #[test]
            fn distance_symmetric_and_squared(a in prop::collection::vec(-1e3f64..1e3, 3),
                                              b in prop::collection::vec(-1e3f64..1e3, 3)) {
                let (a, b) = (Point::new(a).unwrap(), Point::new(b).unwrap());
                let d1 = distance(&a, &b, CostKind::Median).unwrap();
                let d2 = distance(&a, &b, CostKind::Means).unwrap();
                prop_assert_eq!(d2, distance(&b, &a, CostKind::Means).unwrap());
                prop_assert!((d1 * d1 - d2).abs() <= 1e-12 * d2.max(f64::MIN_POSITIVE));
                prop_assert_eq!(d2 == 0.0, a == b);
            }

            #[test]
            fn euclidean_matrices_are_metrics(r in rows(12, 2)) {
                let data = Dataset::from_rows(r).unwrap();
                let m = FiniteMetric::from_dataset(&data);
                prop_assert_eq!(validate_metric(&m.rows()), Ok(()));
            }
        }
    }
}
