//! Upper-bound point sets: the 1-D grid, the d-dimensional fan, and the
//! annuli cover of a finite metric.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{raw_cost, CenterSet};
use crate::error::{check_range, Error, Result};
use crate::geometry::{sq_dist, CostKind, Dataset, FiniteMetric, Point};
use crate::leq_rel;
use crate::metricspace;
use crate::nets::{self, SphereNet};

fn check_epsilon(epsilon: f64) -> Result<()> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)
}

/// Grid step as a fraction of R: √(ε/2) for means, ε/2 for median.
pub fn grid_step(epsilon: f64, kind: CostKind) -> f64 {
    match kind {
        CostKind::Means => (epsilon / 2.0).sqrt(),
        CostKind::Median => epsilon / 2.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperGrid1d {
    /// Sorted, distinct.
    pub points: Vec<f64>,
    pub epsilon: f64,
    pub kind: CostKind,
    /// Base radius R.
    pub base: f64,
    /// Grid step g (as a fraction of R).
    pub step: f64,
    /// Geometric ratio r = 1 + g.
    pub ratio: f64,
    /// Number of geometric levels beyond R.
    pub levels: u32,
    pub n: usize,
    /// Φ({0}, X).
    pub origin_cost: f64,
    /// Φ(S, X).
    pub cost: f64,
}

impl UpperGrid1d {
    /// |S₁| + |S₂| before de-duplication, for a two-sided grid.
    pub fn size_bound(&self) -> usize {
        2 * ((1.0 / self.step).floor() as usize + 1) + 2 * (self.levels as usize + 1)
    }

    pub fn holds(&self) -> bool {
        leq_rel(self.cost, self.epsilon * self.origin_cost)
    }
}

/// Cost of reals `xs` against sorted, nonempty `grid`.
pub fn cost_on_line(grid: &[f64], xs: &[f64], kind: CostKind) -> f64 {
    xs.iter()
        .map(|&x| {
            let i = grid.partition_point(|&g| g < x);
            let mut best = f64::INFINITY;
            if i < grid.len() {
                best = best.min((grid[i] - x).abs());
            }
            if i > 0 {
                best = best.min((x - grid[i - 1]).abs());
            }
            kind.apply(best)
        })
        .sum()
}

fn grid_1d(xs: &[f64], epsilon: f64, kind: CostKind, two_sided: bool) -> Result<UpperGrid1d> {
    check_epsilon(epsilon)?;
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some((i, &v)) = xs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index: i, value: v });
    }
    let n = xs.len();
    let origin_cost: f64 = xs.iter().map(|x| kind.apply(x.abs())).sum();
    let step = grid_step(epsilon, kind);
    let ratio = 1.0 + step;
    let levels = if n > 1 {
        ((n as f64).ln() / ratio.ln()).ceil() as u32
    } else {
        0
    };
    if origin_cost == 0.0 {
        return Ok(UpperGrid1d {
            points: vec![0.0],
            epsilon,
            kind,
            base: 0.0,
            step,
            ratio,
            levels,
            n,
            origin_cost,
            cost: 0.0,
        });
    }
    let base = match kind {
        CostKind::Means => origin_cost.sqrt() / n as f64,
        CostKind::Median => origin_cost / n as f64,
    };
    let top = ratio.powi(levels as i32) * base;
    let far = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !leq_rel(far, top) {
        return Err(Error::Invariant(format!(
            "point at {far} lies beyond the outermost level {top}"
        )));
    }
    let mut pts = Vec::new();
    let fine = (1.0 / step).floor() as usize;
    for i in 0..=fine {
        pts.push(i as f64 * step * base);
    }
    for i in 0..=levels {
        pts.push(ratio.powi(i as i32) * base);
    }
    if two_sided {
        let neg: Vec<f64> = pts.iter().map(|p| -p).collect();
        pts.extend(neg);
    }
    for p in &mut pts {
        // fold −0 into +0 so the origin appears once
        *p += 0.0;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let cost = cost_on_line(&pts, xs, kind);
    Ok(UpperGrid1d {
        points: pts,
        epsilon,
        kind,
        base,
        step,
        ratio,
        levels,
        n,
        origin_cost,
        cost,
    })
}

/// Grid S = S₁ ∪ S₂ on the line for data measured from the origin:
/// S₁ = {±i·g·R : 0 ≤ i ≤ ⌊1/g⌋}, S₂ = {±rⁱ·R : 0 ≤ i ≤ t}, with
/// R = √Φ({0},X)/n (means) or Φ({0},X)/n (median), r = 1 + g and
/// t = ⌈ln n / ln r⌉. Then Φ(S, X) ≤ ε·Φ({0}, X).
pub fn build_1d_upper(xs: &[f64], epsilon: f64, kind: CostKind) -> Result<UpperGrid1d> {
    grid_1d(xs, epsilon, kind, true)
}

/// The nonnegative half of [`build_1d_upper`], for radii along a ray.
pub fn build_1d_upper_one_sided(radii: &[f64], epsilon: f64, kind: CostKind) -> Result<UpperGrid1d> {
    if let Some(&v) = radii.iter().find(|v| **v < 0.0) {
        return Err(Error::OutOfRange {
            name: "radius",
            value: v,
            range: "[0, inf)",
        });
    }
    grid_1d(radii, epsilon, kind, false)
}

/// A cluster handed to the fan builder: its reference center and the
/// indices of its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Point,
    pub members: Vec<usize>,
}

/// Cells from a center set by nearest-center assignment.
pub fn cells_from_centers(centers: &CenterSet, data: &Dataset) -> Vec<Cell> {
    let parts = crate::cost::voronoi_partition(centers, data, CostKind::Means).expect("dims checked by caller");
    centers
        .centers()
        .iter()
        .cloned()
        .zip(parts)
        .map(|(center, members)| Cell { center, members })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetSource {
    /// Build a direction net per cell. For d >= 3 the cell's own directions
    /// are added to `pool` random ones, so every member is snapped within
    /// the net scale exactly.
    Build { pool: Option<usize>, seed: u64 },
    /// Use this net for every cell.
    Provided(SphereNet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanCell {
    pub center: Point,
    pub members: usize,
    pub net_size: usize,
    pub rays_used: usize,
    pub max_ray_points: usize,
    /// Σ over members of the cost to the cell center.
    pub center_cost: f64,
    /// max over members of dist(y, ray) / ||y − c||.
    pub max_snap_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanCoreset {
    pub points: Vec<Point>,
    pub epsilon: f64,
    pub kind: CostKind,
    /// Net scale (√(ε/2) for means, ε/2 for median).
    pub net_scale: f64,
    pub cells: Vec<FanCell>,
    /// Σᵢ Φ({cᵢ}, cellᵢ).
    pub baseline: f64,
    /// Φ(ξ, X).
    pub cost: f64,
    /// Largest snapping ratio over all points.
    pub max_snap_ratio: f64,
}

impl FanCoreset {
    pub fn ratio(&self) -> f64 {
        if self.baseline == 0.0 {
            if self.cost == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.cost / self.baseline
        }
    }

    pub fn holds(&self) -> bool {
        leq_rel(self.cost, self.epsilon * self.baseline)
    }

    /// Whether every point sits within `net_scale·||y − c||` of its ray.
    pub fn snapping_holds(&self) -> bool {
        self.max_snap_ratio <= self.net_scale * (1.0 + crate::REL_TOL)
    }

    pub fn center_set(&self) -> Result<CenterSet> {
        CenterSet::new(self.points.clone())
    }
}

fn fan_cell(
    data: &Dataset,
    cell: &Cell,
    epsilon: f64,
    kind: CostKind,
    scale: f64,
    source: &NetSource,
    cell_index: usize,
) -> Result<(Vec<Point>, FanCell)> {
    let d = data.dim();
    let c = cell.center.coords();
    let offsets: Vec<Vec<f64>> = cell
        .members
        .iter()
        .map(|&i| data.point(i).coords().iter().zip(c).map(|(x, y)| x - y).collect())
        .collect();
    let center_cost: f64 = offsets
        .iter()
        .map(|v| kind.from_sq(v.iter().map(|a| a * a).sum()))
        .sum();
    let net = match source {
        NetSource::Provided(net) => {
            if net.dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: net.dim,
                });
            }
            net.clone()
        }
        NetSource::Build { pool, seed } => {
            let extra: &[Vec<f64>] = if d >= 3 { &offsets } else { &[] };
            nets::build_net_with(d, scale, *pool, extra, seed.wrapping_add(cell_index as u64))?
        }
    };

    let mut per_ray: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut max_snap: f64 = 0.0;
    for v in &offsets {
        let norm_sq: f64 = v.iter().map(|a| a * a).sum();
        if norm_sq == 0.0 {
            per_ray.entry(0).or_default().push(0.0);
            continue;
        }
        let (j, dot) = net.best_direction(v);
        let s = dot.max(0.0);
        let off_ray = (norm_sq - s * s).max(0.0).sqrt();
        max_snap = max_snap.max(off_ray / norm_sq.sqrt());
        per_ray.entry(j).or_default().push(s);
    }

    let mut out = Vec::new();
    let mut max_ray_points = 0;
    for (&j, radii) in &per_ray {
        let grid = build_1d_upper_one_sided(radii, epsilon / 2.0, kind)?;
        max_ray_points = max_ray_points.max(grid.points.len());
        let u = net.points[j].coords();
        for &rho in &grid.points {
            out.push(cell.center.offset(u, rho));
        }
    }
    Ok((
        out,
        FanCell {
            center: cell.center.clone(),
            members: cell.members.len(),
            net_size: net.len(),
            rays_used: per_ray.len(),
            max_ray_points,
            center_cost,
            max_snap_ratio: max_snap,
        },
    ))
}

/// Fan point set ξ for a clustering of `data`: within each cell, members are
/// snapped to the nearest ray from the cell center along a direction net,
/// and a one-sided grid at precision ε/2 is laid along each used ray. The
/// result satisfies Φ(ξ, X) ≤ ε·Σᵢ Φ({cᵢ}, cellᵢ); any clustering may be
/// supplied, the optimal one gives the sharpest bound.
pub fn build_fan_coreset(
    data: &Dataset,
    cells: &[Cell],
    epsilon: f64,
    kind: CostKind,
    source: &NetSource,
) -> Result<FanCoreset> {
    check_epsilon(epsilon)?;
    for cell in cells {
        if cell.center.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: cell.center.dim(),
            });
        }
        if let Some(&i) = cell.members.iter().find(|&&i| i >= data.len()) {
            return Err(Error::IndexOutOfBounds {
                index: i,
                size: data.len(),
            });
        }
    }
    let scale = grid_step(epsilon, kind);
    let built: Vec<(Vec<Point>, FanCell)> = cells
        .par_iter()
        .enumerate()
        .filter(|(_, c)| !c.members.is_empty())
        .map(|(i, c)| fan_cell(data, c, epsilon, kind, scale, source, i))
        .collect::<Result<_>>()?;

    let mut points: Vec<Point> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut fan_cells = Vec::with_capacity(built.len());
    for (pts, fc) in built {
        for p in pts {
            let key: Vec<u64> = p.coords().iter().map(|x| (x + 0.0).to_bits()).collect();
            if seen.insert(key) {
                points.push(p);
            }
        }
        fan_cells.push(fc);
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let baseline = fan_cells.iter().map(|c| c.center_cost).sum();
    let max_snap_ratio = fan_cells.iter().map(|c| c.max_snap_ratio).fold(0.0, f64::max);
    let cost = raw_cost(&points, data.points(), kind);
    Ok(FanCoreset {
        points,
        epsilon,
        kind,
        net_scale: scale,
        cells: fan_cells,
        baseline,
        cost,
        max_snap_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub level: u32,
    /// Outer radius 2^j·R.
    pub outer: f64,
    pub members: Vec<usize>,
    pub representatives: Vec<usize>,
    /// Largest distance from a member to its representative.
    pub max_rep_distance: f64,
    /// Allowed representative distance (ε/2)·2^j·R.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnuliCover {
    pub center: usize,
    pub epsilon: f64,
    pub base: f64,
    pub levels: u32,
    pub representatives: Vec<usize>,
    pub annuli: Vec<Annulus>,
    /// Φ({c}, Y).
    pub center_cost: f64,
    /// Φ(S, Y).
    pub cost: f64,
}

impl AnnuliCover {
    pub fn holds(&self) -> bool {
        leq_rel(self.cost, self.epsilon * self.center_cost)
    }

    pub fn annuli_hold(&self) -> bool {
        self.annuli.iter().all(|a| a.max_rep_distance <= a.bound)
    }
}

/// Representatives for the metric k-median cost of `y` around `c`: split
/// `y` into annuli Y₀ = {D ≤ R}, Y_j = {D ≤ 2^j R} \ Y_{j−1} with
/// R = mean distance to `c` and j up to ⌈log₂|Y|⌉ + 1, cover each annulus
/// greedily by parts of diameter (ε/2)·2^j·R and keep one point per part.
pub fn build_metric_annuli(m: &FiniteMetric, y: &[usize], c: usize, epsilon: f64) -> Result<AnnuliCover> {
    check_epsilon(epsilon)?;
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    m.check_index(c)?;
    for &i in y {
        m.check_index(i)?;
    }
    let center_cost: f64 = y.iter().map(|&i| m.d(i, c)).sum();
    let levels = (y.len() as f64).log2().ceil() as u32 + 1;
    if center_cost == 0.0 {
        return Ok(AnnuliCover {
            center: c,
            epsilon,
            base: 0.0,
            levels,
            representatives: vec![c],
            annuli: Vec::new(),
            center_cost,
            cost: 0.0,
        });
    }
    let base = center_cost / y.len() as f64;
    let mut level_of: Vec<Vec<usize>> = vec![Vec::new(); levels as usize + 1];
    for &i in y {
        let dist = m.d(i, c);
        let j = (0..=levels)
            .find(|&j| dist <= f64::from(2u32.pow(j)) * base)
            .ok_or_else(|| Error::Invariant(format!("point {i} at {dist} is outside every annulus")))?;
        level_of[j as usize].push(i);
    }
    let mut reps = Vec::new();
    let mut annuli = Vec::new();
    for (j, members) in level_of.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let outer = f64::from(2u32.pow(j as u32)) * base;
        let bound = epsilon / 2.0 * outer;
        let cover = metricspace::greedy_cover(m, &members, bound);
        let mut worst: f64 = 0.0;
        let mut level_reps = Vec::with_capacity(cover.parts.len());
        for part in &cover.parts {
            let rep = part[0];
            level_reps.push(rep);
            for &q in part {
                worst = worst.max(m.d(q, rep));
            }
        }
        reps.extend(&level_reps);
        annuli.push(Annulus {
            level: j as u32,
            outer,
            members,
            representatives: level_reps,
            max_rep_distance: worst,
            bound,
        });
    }
    let cost = y
        .iter()
        .map(|&i| reps.iter().map(|&s| m.d(i, s)).fold(f64::INFINITY, f64::min))
        .sum();
    Ok(AnnuliCover {
        center: c,
        epsilon,
        base,
        levels,
        representatives: reps,
        annuli,
        center_cost,
        cost,
    })
}

/// Euclidean distance from `y` to the ray {c + s·u : s ≥ 0}.
pub fn distance_to_ray(y: &[f64], c: &[f64], u: &[f64]) -> f64 {
    let v: Vec<f64> = y.iter().zip(c).map(|(a, b)| a - b).collect();
    let s = v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    let foot: Vec<f64> = c.iter().zip(u).map(|(a, b)| a + s * b).collect();
    sq_dist(y, &foot).sqrt()
}
