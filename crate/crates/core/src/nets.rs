//! ε-covers and ε-packings of the unit sphere S^{d−1} (chordal distance).
//!
//! * d = 1: the two points {−1, +1};
//! * d = 2: an evenly spaced angular grid whose spacing is at least the angle
//!   subtending a chord of length ε;
//! * d >= 3: farthest-point traversal over a pool of random unit vectors,
//!   stopped once every pool vector lies within ε of the net, then continued
//!   over fresh batches until a whole batch is already covered. The output is
//!   a maximal ε-packing of everything examined and hence an ε-cover of it;
//!   its cover property on the whole sphere is certified statistically by
//!   probes.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{sq_dist, Point};
use crate::rng::{self, Rng};

/// Slack allowed on the packing distance.
pub const PACKING_TOL: f64 = 1e-12;
/// Tolerance on unit norms.
pub const NORM_TOL: f64 = 1e-9;
const PROBE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Cover,
    Packing,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereNet {
    pub dim: usize,
    pub epsilon: f64,
    pub points: Vec<Point>,
    pub kind: NetKind,
    /// Total number of candidate vectors examined, refinement batches
    /// included (0 when the construction is deterministic).
    pub pool: usize,
}

impl SphereNet {
    /// Wrap explicit unit vectors.
    pub fn from_points(dim: usize, epsilon: f64, points: Vec<Point>, kind: NetKind) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCenterSet);
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if (p.norm() - 1.0).abs() > NORM_TOL {
                return Err(Error::Invariant(format!("net point has norm {}", p.norm())));
            }
        }
        Ok(SphereNet {
            dim,
            epsilon,
            points,
            kind,
            pool: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the direction with the largest dot product with `v`
    /// (ties → lowest index), and that dot product.
    pub fn best_direction(&self, v: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, u) in self.points.iter().enumerate() {
            let dot: f64 = u.coords().iter().zip(v).map(|(a, b)| a * b).sum();
            if dot > best.1 {
                best = (i, dot);
            }
        }
        best
    }
}

/// Volume upper bound (1 + 2/ε)^d on the size of any ε-packing of S^{d−1}.
pub fn covering_upper_bound(d: usize, epsilon: f64) -> f64 {
    (1.0 + 2.0 / epsilon).powi(d as i32)
}

/// Lower bound 1/(4ε)^{d−1} on the packing number of S^{d−1}.
pub fn packing_lower_bound(d: usize, epsilon: f64) -> f64 {
    (4.0 * epsilon).powi(1 - d as i32)
}

/// Default candidate pool: max(10⁴, min(200·(1+2/ε)^d, 10⁶)).
pub fn default_pool(d: usize, epsilon: f64) -> usize {
    let want = 200.0 * covering_upper_bound(d, epsilon);
    (want.min(1e6) as usize).max(10_000)
}

/// A uniformly random unit vector in R^d.
pub fn random_unit(d: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `count` uniform unit vectors, generated chunk-by-chunk from independent
/// streams so the result does not depend on thread scheduling.
pub fn probe_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count.div_ceil(PROBE_CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut r = rng::stream(seed, c as u64);
            let len = PROBE_CHUNK.min(count - c * PROBE_CHUNK);
            (0..len).map(move |_| random_unit(d, &mut r)).collect::<Vec<_>>()
        })
        .collect()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    check_range("epsilon", epsilon, "(0, 1)", epsilon > 0.0 && epsilon < 1.0)
}

fn circle_grid(epsilon: f64) -> Vec<Point> {
    let step = 2.0 * (epsilon / 2.0).asin();
    let count = ((2.0 * PI / step).floor() as usize).max(1);
    (0..count)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / count as f64;
            Point::new(vec![a.cos(), a.sin()]).expect("finite")
        })
        .collect()
}

/// Farthest-point traversal over `pool` (flat, row-major, `d` columns),
/// continuing from the current `net` (same layout): repeatedly add the pool
/// vector farthest from the net until every pool vector is within `epsilon`.
/// An empty net starts from pool row 0. Returns the number of vectors added.
fn extend_traversal(net: &mut Vec<f64>, pool: &[f64], d: usize, epsilon: f64) -> usize {
    let n = pool.len() / d;
    if n == 0 {
        return 0;
    }
    let row = |i: usize| &pool[i * d..(i + 1) * d];
    let before = net.len() / d;
    let mut min_sq: Vec<f64> = (0..n)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            net.chunks_exact(d)
                .map(|u| sq_dist(row(i), u))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if before == 0 {
        net.extend_from_slice(row(0));
    }
    loop {
        let c = &net[net.len() - d..];
        let (far, far_sq) = min_sq
            .par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .map(|(i, m)| {
                let s = sq_dist(row(i), c);
                if s < *m {
                    *m = s;
                }
                (i, *m)
            })
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        // compare distances, not squares, so the packing check agrees exactly
        if far == usize::MAX || far_sq.sqrt() < epsilon {
            return net.len() / d - before;
        }
        net.extend_from_slice(row(far));
    }
}

/// Pool vectors closer than this fraction of ε to the net are not near a hole.
const REPAIR_FRACTION: f64 = 0.8;

/// Point of the sphere equidistant from the rows of `near` (d unit vectors),
/// on the same side as `x`. `None` when the vectors are degenerate.
fn circumcenter(near: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let d = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for u in &near[1..] {
        let mut v: Vec<f64> = u.iter().zip(near[0]).map(|(a, b)| a - b).collect();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n < 1e-9 {
            return None;
        }
        basis.push(v.into_iter().map(|a| a / n).collect());
    }
    let mut c = x.to_vec();
    for q in &basis {
        let dot: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
        c.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
    }
    let n = c.iter().map(|a| a * a).sum::<f64>().sqrt();
    (n > 1e-9).then(|| c.into_iter().map(|a| a / n).collect())
}

/// Fill holes between net points: for every pool vector whose distance to
/// the net exceeds `REPAIR_FRACTION * epsilon`, take the circumcenter of its d nearest
/// net points (a vertex of the spherical Voronoi diagram, where the distance
/// to the net peaks) and add it if it is at least `epsilon` from the net.
/// Returns the number of vectors added.
fn repair_holes(net: &mut Vec<f64>, pool: &[f64], d: usize, epsilon: f64) -> usize {
    let snapshot = net.clone();
    let mut found: Vec<(f64, Vec<f64>)> = pool
        .par_chunks_exact(d)
        .with_min_len(256)
        .filter_map(|x| {
            let nearest = snapshot
                .chunks_exact(d)
                .map(|u| sq_dist(x, u))
                .fold(f64::INFINITY, f64::min);
            if nearest.sqrt() < REPAIR_FRACTION * epsilon || snapshot.len() < d * d {
                return None;
            }
            let mut dists: Vec<(f64, usize)> = snapshot
                .chunks_exact(d)
                .enumerate()
                .map(|(j, u)| (sq_dist(x, u), j))
                .collect();
            dists.select_nth_unstable_by(d - 1, |a, b| a.0.total_cmp(&b.0));
            let near: Vec<&[f64]> = dists[..d]
                .iter()
                .map(|&(_, j)| &snapshot[j * d..(j + 1) * d])
                .collect();
            let c = circumcenter(&near, x)?;
            let gap = snapshot
                .chunks_exact(d)
                .map(|u| sq_dist(&c, u))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            (gap >= epsilon).then_some((gap, c))
        })
        .collect();
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.iter().zip(&b.1).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)));
    let before = net.len() / d;
    for (_, c) in found {
        let clear = net[snapshot.len()..]
            .chunks_exact(d)
            .all(|u| sq_dist(&c, u).sqrt() >= epsilon);
        if clear {
            net.extend(c);
        }
    }
    net.len() / d - before
}

/// Upper limit on refinement rounds after the initial pool.
pub const MAX_REFINE_ROUNDS: usize = 64;

/// Build an ε-net of S^{d−1} (kind `Both`). `pool` overrides the default
/// candidate-pool size for d >= 3 and is ignored otherwise.
pub fn build_net(d: usize, epsilon: f64, pool: Option<usize>, seed: u64) -> Result<SphereNet> {
    build_net_with(d, epsilon, pool, &[], seed)
}

/// As [`build_net`], with `extra` directions placed at the front of the pool
/// (they are normalized; zero vectors are dropped). For d >= 3 every extra
/// direction is therefore within ε of the returned net, exactly.
pub fn build_net_with(
    d: usize,
    epsilon: f64,
    pool: Option<usize>,
    extra: &[Vec<f64>],
    seed: u64,
) -> Result<SphereNet> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    match d {
        1 => Ok(SphereNet {
            dim: 1,
            epsilon,
            points: vec![Point::scalar(-1.0)?, Point::scalar(1.0)?],
            kind: NetKind::Both,
            pool: 0,
        }),
        2 => Ok(SphereNet {
            dim: 2,
            epsilon,
            points: circle_grid(epsilon),
            kind: NetKind::Both,
            pool: 0,
        }),
        _ => {
            let random = pool.unwrap_or_else(|| default_pool(d, epsilon));
            let mut flat: Vec<f64> = Vec::with_capacity((random + extra.len()) * d);
            for v in extra {
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 && n.is_finite() {
                    flat.extend(v.iter().map(|x| x / n));
                }
            }
            for v in probe_directions(d, random, seed) {
                flat.extend(v);
            }
            if flat.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let mut net = Vec::new();
            extend_traversal(&mut net, &flat, d, epsilon);
            let mut drawn = flat.len() / d;
            // A finite pool leaves small holes between net points. Repair them
            // at Voronoi vertices, then keep going over fresh batches until a
            // batch adds nothing; every added vector is at least ε from the net.
            if random > 0 {
                while repair_holes(&mut net, &flat, d, epsilon) > 0 {}
                for round in 1..=MAX_REFINE_ROUNDS as u64 {
                    let batch_seed = seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    let batch: Vec<f64> = probe_directions(d, random, batch_seed).concat();
                    drawn += random;
                    let mut added = extend_traversal(&mut net, &batch, d, epsilon);
                    while repair_holes(&mut net, &batch, d, epsilon) > 0 {
                        added += 1;
                    }
                    if added == 0 {
                        break;
                    }
                }
            }
            let points = net
                .chunks_exact(d)
                .map(|u| Point::new(u.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            Ok(SphereNet {
                dim: d,
                epsilon,
                points,
                kind: NetKind::Both,
                pool: drawn,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub max_gap: f64,
    pub pass: bool,
    /// Analytic (d <= 2) rather than probe-based.
    pub exact: bool,
    pub probes: usize,
}

/// Largest distance from a sphere point to the net. Exact for d <= 2; for
/// d >= 3 the maximum over `probes` random unit vectors.
pub fn verify_cover(net: &SphereNet, probes: usize, seed: u64) -> CoverCheck {
    let done = |max_gap: f64, exact: bool, probes: usize| CoverCheck {
        max_gap,
        pass: max_gap <= net.epsilon,
        exact,
        probes,
    };
    match net.dim {
        1 => {
            let has = |s: f64| net.points.iter().any(|p| p.coords()[0] == s);
            let gap = match (has(-1.0), has(1.0)) {
                (true, true) => 0.0,
                (false, false) => f64::INFINITY,
                _ => 2.0,
            };
            done(gap, true, 0)
        }
        2 => {
            let mut angles: Vec<f64> = net
                .points
                .iter()
                .map(|p| p.coords()[1].atan2(p.coords()[0]))
                .collect();
            angles.sort_by(f64::total_cmp);
            let mut widest = angles[0] + 2.0 * PI - angles[angles.len() - 1];
            for w in angles.windows(2) {
                widest = widest.max(w[1] - w[0]);
            }
            // the midpoint of the widest arc is the farthest sphere point
            done(2.0 * (widest / 4.0).sin(), true, 0)
        }
        d => {
            let gap = probe_directions(d, probes, seed)
                .par_iter()
                .map(|v| {
                    net.points
                        .iter()
                        .map(|p| sq_dist(p.coords(), v))
                        .fold(f64::INFINITY, f64::min)
                        .sqrt()
                })
                .reduce(|| 0.0, f64::max);
            done(gap, false, probes)
        }
    }
}

/// Exact minimum pairwise distance (infinite for a single point).
pub fn verify_packing(net: &SphereNet) -> f64 {
    let pts = &net.points;
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            pts[i + 1..]
                .iter()
                .map(|q| sq_dist(pts[i].coords(), q.coords()))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .sqrt()
}

pub fn packing_ok(net: &SphereNet, min_pairwise: f64) -> bool {
    min_pairwise >= net.epsilon - PACKING_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCertificate {
    pub dim: usize,
    pub epsilon: f64,
    pub kind: NetKind,
    pub size: usize,
    pub max_gap: f64,
    pub cover_exact: bool,
    pub probes: usize,
    pub min_pairwise: f64,
    pub pool: usize,
    pub size_upper_bound: f64,
    pub pass: bool,
}

/// Run both checks plus the volume bound.
pub fn certify(net: &SphereNet, probes: usize, seed: u64) -> NetCertificate {
    let cover = verify_cover(net, probes, seed);
    let min_pairwise = verify_packing(net);
    let bound = covering_upper_bound(net.dim, net.epsilon);
    NetCertificate {
        dim: net.dim,
        epsilon: net.epsilon,
        kind: net.kind,
        size: net.len(),
        max_gap: cover.max_gap,
        cover_exact: cover.exact,
        probes: cover.probes,
        min_pairwise,
        pool: net.pool,
        size_upper_bound: bound,
        pass: cover.pass && packing_ok(net, min_pairwise) && net.len() as f64 <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_net() {
        let n = build_net(1, 0.3, None, 0).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(verify_packing(&n), 2.0);
        assert_eq!(verify_cover(&n, 10, 0).max_gap, 0.0);
    }

    #[test]
    fn circle_grid_at_half() {
        let n = build_net(2, 0.5, None, 0).unwrap();
        let step = 2.0 * 0.25f64.asin();
        assert!((step - 0.50536).abs() < 1e-5);
        // floor keeps the spacing at least one step, so the grid packs
        assert_eq!(n.len(), 12);
        let chord = verify_packing(&n);
        assert!(chord >= 0.5);
        let gap = verify_cover(&n, 0, 0);
        assert!(gap.exact && gap.pass);
        assert!((gap.max_gap - 2.0 * (2.0 * PI / 12.0 / 4.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn single_point_fails_cover() {
        let n = SphereNet::from_points(2, 0.5, vec![Point::new(vec![1.0, 0.0]).unwrap()], NetKind::Both).unwrap();
        let c = verify_cover(&n, 0, 0);
        assert!((c.max_gap - 2.0).abs() < 1e-12);
        assert!(!c.pass);
    }

    #[test]
    fn duplicate_point_fails_packing() {
        let mut n = build_net(2, 0.5, None, 0).unwrap();
        n.points.push(n.points[3].clone());
        let m = verify_packing(&n);
        assert_eq!(m, 0.0);
        assert!(!packing_ok(&n, m));
    }

    #[test]
    fn net_equal_to_probes_has_zero_gap() {
        let probes = probe_directions(3, 500, 4);
        let pts = probes.iter().map(|v| Point::new(v.clone()).unwrap()).collect();
        let n = SphereNet::from_points(3, 0.5, pts, NetKind::Cover).unwrap();
        assert_eq!(verify_cover(&n, 500, 4).max_gap, 0.0);
    }

    #[test]
    fn greedy_net_covers_its_pool_and_packs() {
        let pool = probe_directions(3, 3000, 9);
        let n = build_net_with(3, 0.4, Some(0), &pool, 1).unwrap();
        assert_eq!(n.pool, 3000);
        assert_eq!(n, build_net_with(3, 0.4, Some(0), &pool, 2).unwrap());
        for v in &pool {
            let (_, dot) = n.best_direction(v);
            // |u - v|² = 2 - 2·dot for unit vectors
            assert!((2.0 - 2.0 * dot).max(0.0).sqrt() < 0.4 + 1e-12);
        }
        assert!(packing_ok(&n, verify_packing(&n)));
        assert!((n.len() as f64) <= covering_upper_bound(3, 0.4));
    }

    #[test]
    fn nets_are_reproducible() {
        let a = build_net(3, 0.6, Some(2000), 5).unwrap();
        assert_eq!(a, build_net(3, 0.6, Some(2000), 5).unwrap());
    }

    #[test]
    fn epsilon_range_is_checked() {
        assert!(build_net(2, 0.0, None, 0).is_err());
        assert!(build_net(2, 1.0, None, 0).is_err());
        assert!(build_net(0, 0.5, None, 0).is_err());
    }

    #[test]
    fn circle_grid_meets_packing_lower_bound() {
        for eps in [0.05, 0.1, 0.25] {
            let n = build_net(2, eps, None, 0).unwrap();
            assert!(n.len() as f64 >= packing_lower_bound(2, eps));
        }
    }

    #[test]
    fn default_pool_is_clamped() {
        assert_eq!(default_pool(3, 0.9), 10_000);
        assert_eq!(default_pool(8, 0.1), 1_000_000);
    }
}
