//! Clustering cost Φ, Voronoi assignment and single-center optima.
//!
//! Nearest-center ties always go to the lowest center index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sq_dist, CostKind, Dataset, FiniteMetric, Point, WeightedSet};

const WEISZFELD_MAX_ITERS: usize = 10_000;
const WEISZFELD_REL_STOP: f64 = 1e-9;

/// A nonempty list of candidate centers sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CenterSet {
    centers: Vec<Point>,
}

impl CenterSet {
    pub fn new(centers: Vec<Point>) -> Result<Self> {
        let dim = centers.first().ok_or(Error::EmptyCenterSet)?.dim();
        if let Some(c) = centers.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        Ok(CenterSet { centers })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        CenterSet::new(xs.iter().map(|&x| Point::scalar(x)).collect::<Result<_>>()?)
    }

    pub fn single(p: Point) -> Self {
        CenterSet { centers: vec![p] }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.centers[i]
    }

    pub fn into_points(self) -> Vec<Point> {
        self.centers
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        Ok(())
    }
}

impl From<&Dataset> for CenterSet {
    fn from(data: &Dataset) -> Self {
        CenterSet {
            centers: data.points().to_vec(),
        }
    }
}

/// Index and squared distance of the nearest center; ties go to the lowest index.
#[inline]
pub fn nearest(x: &[f64], centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c.coords());
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total: f64,
    pub kind: CostKind,
    pub assignment: Vec<usize>,
    pub per_center: Vec<f64>,
}

/// Φ(C, X) with the full assignment.
pub fn evaluate(centers: &CenterSet, data: &Dataset, kind: CostKind) -> Result<CostReport> {
    centers.check_dim(data.dim())?;
    let mut assignment = Vec::with_capacity(data.len());
    let mut per_center = vec![0.0; centers.len()];
    let mut total = 0.0;
    for x in data {
        let (i, sq) = nearest(x.coords(), centers.centers());
        let term = kind.from_sq(sq);
        assignment.push(i);
        per_center[i] += term;
        total += term;
    }
    Ok(CostReport {
        total,
        kind,
        assignment,
        per_center,
    })
}

/// Φ(C, X) without bookkeeping.
pub fn cost(centers: &CenterSet, data: &Dataset, kind: CostKind) -> Result<f64> {
    centers.check_dim(data.dim())?;
    Ok(raw_cost(centers.centers(), data.points(), kind))
}

pub(crate) fn raw_cost(centers: &[Point], points: &[Point], kind: CostKind) -> f64 {
    points
        .iter()
        .map(|x| kind.from_sq(nearest(x.coords(), centers).1))
        .sum()
}

/// Φ(C, S, w) = Σ w(s) · min_c D(s, c)^p.
pub fn evaluate_weighted(centers: &CenterSet, set: &WeightedSet, kind: CostKind) -> Result<f64> {
    if let Some(d) = set.dim() {
        centers.check_dim(d)?;
    }
    Ok(set
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(p, w)| w * kind.from_sq(nearest(p.coords(), centers.centers()).1))
        .sum())
}

/// Cells of the Voronoi partition as point indices, one per center (possibly empty).
pub fn voronoi_partition(
    centers: &CenterSet,
    data: &Dataset,
    _kind: CostKind,
) -> Result<Vec<Vec<usize>>> {
    centers.check_dim(data.dim())?;
    let mut cells = vec![Vec::new(); centers.len()];
    for (j, x) in data.iter().enumerate() {
        cells[nearest(x.coords(), centers.centers()).0].push(j);
    }
    Ok(cells)
}

pub(crate) fn mean_of<'a>(dim: usize, points: impl IntoIterator<Item = &'a Point>) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for p in points {
        for (s, c) in sum.iter_mut().zip(p.coords()) {
            *s += c;
        }
        n += 1;
    }
    let n = n.max(1) as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    sum
}

/// Coordinate-wise mean.
pub fn centroid(data: &Dataset) -> Point {
    Point::new(mean_of(data.dim(), data)).expect("mean of finite points is finite")
}

/// Lower median of a list of reals.
pub(crate) fn lower_median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Geometric median by Weiszfeld iteration with the Vardi–Zhang step at data points.
pub fn geometric_median(points: &[&Point]) -> Point {
    let dim = points[0].dim();
    let mut y = mean_of(dim, points.iter().copied());
    let scale = points
        .iter()
        .map(|p| sq_dist(p.coords(), &y).sqrt())
        .sum::<f64>()
        / points.len() as f64;
    if scale == 0.0 {
        return Point::new(y).expect("finite");
    }
    let coincide = 1e-14 * scale;
    for _ in 0..WEISZFELD_MAX_ITERS {
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        let mut pull = vec![0.0; dim];
        let mut eta = 0.0;
        for p in points {
            let d = sq_dist(p.coords(), &y).sqrt();
            if d <= coincide {
                eta += 1.0;
                continue;
            }
            for j in 0..dim {
                num[j] += p.coords()[j] / d;
                pull[j] += (p.coords()[j] - y[j]) / d;
            }
            den += 1.0 / d;
        }
        if den == 0.0 {
            break;
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next: Vec<f64> = if eta == 0.0 {
            t
        } else {
            let r = pull.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r <= eta {
                // a data point with enough mass is optimal
                break;
            }
            let g = (eta / r).min(1.0);
            t.iter().zip(&y).map(|(a, b)| (1.0 - g) * a + g * b).collect()
        };
        let step = sq_dist(&next, &y).sqrt();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        y = next;
        if step <= WEISZFELD_REL_STOP * norm.max(scale) {
            break;
        }
    }
    Point::new(y).expect("finite")
}

/// Optimal single center for the kind: centroid (means), lower median (median,
/// d = 1) or geometric median (median, d > 1).
pub fn one_center(points: &[&Point], kind: CostKind) -> Point {
    assert!(!points.is_empty());
    let dim = points[0].dim();
    match kind {
        CostKind::Means => Point::new(mean_of(dim, points.iter().copied())).expect("finite"),
        CostKind::Median if dim == 1 => {
            let xs: Vec<f64> = points.iter().map(|p| p.coords()[0]).collect();
            Point::scalar(lower_median(&xs)).expect("finite")
        }
        CostKind::Median => geometric_median(points),
    }
}

/// Δ_1(X): cost of the optimal single center (iterative for median in d > 1).
pub fn delta1(data: &Dataset, kind: CostKind) -> f64 {
    let refs: Vec<&Point> = data.iter().collect();
    let c = one_center(&refs, kind);
    raw_cost(std::slice::from_ref(&c), data.points(), kind)
}

/// Σ_{y ∈ points} min_{c ∈ centers} D(y, c) over a finite metric.
pub fn metric_cost(m: &FiniteMetric, centers: &[usize], points: &[usize]) -> f64 {
    points
        .iter()
        .map(|&y| {
            centers
                .iter()
                .map(|&c| m.d(y, c))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}
