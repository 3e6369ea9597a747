//! Lower-bound instance families and random test data.
//!
//! Lower-bound instances put r^{p(t−i)} co-located points at distance r^i
//! (i = 1..t, p = cost exponent) from an apex along every direction of a
//! packing net, with r = ⌈1 + √(32ε)⌉. Radii and multiplicities are exact
//! integers; the instance is kept as weighted sites and expanded to an
//! explicit dataset only when it is small enough.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cost::{evaluate_weighted, nearest, CenterSet};
use crate::error::{check_range, Error, Result};
use crate::geometry::{sq_dist, CostKind, Dataset, Point, WeightedSet, MAX_EXPLICIT_POINTS};
use crate::nets::{self, SphereNet};
use crate::rng;

/// Largest site count for which the local-search adversary runs.
pub const ADVERSARY_MAX_SITES: usize = 128;

/// r = ⌈1 + √(32ε)⌉.
pub fn lower_bound_ratio(epsilon: f64) -> u64 {
    (1.0 + (32.0 * epsilon).sqrt()).ceil() as u64
}

/// Packing scale of the direction net: √(8ε) for means, 4ε for median.
pub fn packing_scale(epsilon: f64, kind: CostKind) -> f64 {
    match kind {
        CostKind::Means => (8.0 * epsilon).sqrt(),
        CostKind::Median => 4.0 * epsilon,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSpec {
    pub epsilon: f64,
    pub kind: CostKind,
    pub k: usize,
    pub d: usize,
    pub t: u32,
    pub r: u64,
    /// Points per ray.
    pub eta: u64,
    pub realized_n: u64,
    pub net_size: usize,
    pub net_scale: f64,
    pub apex_spacing: f64,
    /// Φ(apexes, X) = k·|net|·t·r^{pt}, exact.
    pub apex_cost: f64,
    pub packing_net: Option<SphereNet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundInstance {
    pub spec: LowerBoundSpec,
    pub apexes: Vec<Point>,
    /// Distinct populated locations with their multiplicities.
    pub sites: WeightedSet,
    /// Apex index of each site.
    pub site_apex: Vec<usize>,
    /// Level i (distance r^i from the apex) of each site.
    pub site_level: Vec<u32>,
    /// The expanded dataset, when it has at most 10⁶ points.
    pub data: Option<Dataset>,
}

impl LowerBoundInstance {
    pub fn apex_centers(&self) -> CenterSet {
        CenterSet::new(self.apexes.clone()).expect("at least one apex")
    }

    /// Ball radius around a site at level i: half the net scale times r^i.
    pub fn ball_radius(&self, level: u32) -> f64 {
        self.spec.net_scale / 2.0 * (self.spec.r as f64).powi(level as i32)
    }
}

fn checked_pow(r: u64, e: u32) -> Result<u128> {
    u128::from(r).checked_pow(e).ok_or(Error::Overflow("r^e"))
}

fn build_instance(epsilon: f64, k: usize, t: u32, kind: CostKind, net: SphereNet) -> Result<LowerBoundInstance> {
    check_range("epsilon", epsilon, "(0, 1/8)", epsilon > 0.0 && epsilon < 0.125)?;
    if t == 0 {
        return Err(Error::OutOfRange {
            name: "t",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if k == 0 {
        return Err(Error::InvalidK { k, n: 0 });
    }
    let p = kind.exponent();
    let r = lower_bound_ratio(epsilon);
    let mults: Vec<u128> = (1..=t)
        .map(|i| checked_pow(r, p * (t - i)))
        .collect::<Result<_>>()?;
    let eta: u128 = mults.iter().try_fold(0u128, |a, &m| a.checked_add(m)).ok_or(Error::Overflow("eta"))?;
    let n = eta
        .checked_mul(net.len() as u128)
        .and_then(|v| v.checked_mul(k as u128))
        .ok_or(Error::Overflow("n"))?;
    let n = u64::try_from(n).map_err(|_| Error::Overflow("n"))?;
    let top = checked_pow(r, p * t)?;
    let apex_cost = (k as u128)
        .checked_mul(net.len() as u128)
        .and_then(|v| v.checked_mul(u128::from(t)))
        .and_then(|v| v.checked_mul(top))
        .ok_or(Error::Overflow("apex cost"))? as f64;

    let d = net.dim;
    let spacing = 2.0 * (n as f64) * (n as f64);
    let apexes: Vec<Point> = (0..k)
        .map(|a| {
            let mut c = vec![0.0; d];
            c[0] = spacing * a as f64;
            Point::new(c)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut site_apex = Vec::new();
    let mut site_level = Vec::new();
    for (a, apex) in apexes.iter().enumerate() {
        for u in &net.points {
            for (i, &m) in (1..=t).zip(&mults) {
                let rho = checked_pow(r, i)? as f64;
                points.push(apex.offset(u.coords(), rho));
                weights.push(m as f64);
                site_apex.push(a);
                site_level.push(i);
            }
        }
    }
    let data = if n as usize <= MAX_EXPLICIT_POINTS {
        let mut expanded = Vec::with_capacity(n as usize);
        for (pt, &w) in points.iter().zip(&weights) {
            expanded.extend(std::iter::repeat_n(pt.clone(), w as usize));
        }
        Some(Dataset::new(expanded)?)
    } else {
        None
    };
    let sites = WeightedSet::new(points, weights)?;
    Ok(LowerBoundInstance {
        spec: LowerBoundSpec {
            epsilon,
            kind,
            k,
            d,
            t,
            r,
            eta: eta as u64,
            realized_n: n,
            net_size: net.len(),
            net_scale: packing_scale(epsilon, kind),
            apex_spacing: spacing,
            apex_cost,
            packing_net: (d > 1).then_some(net),
        },
        apexes,
        sites,
        site_apex,
        site_level,
        data,
    })
}

/// One-dimensional instance: r^{p(t−i)} points at −r^i and at +r^i. With the
/// center at 0 its cost is 2t·r^{pt}; the negative side is listed first.
pub fn gen_lower_1d(epsilon: f64, t: u32, kind: CostKind) -> Result<LowerBoundInstance> {
    let net = nets::build_net(1, 0.5, None, 0)?;
    build_instance(epsilon, 1, t, kind, net)
}

/// d-dimensional instance: k apexes on the first axis, 2n² apart, each with
/// a one-sided 1-D profile along every direction of a packing net at scale
/// √(8ε) (means) or 4ε (median). A supplied net must pack at that scale;
/// otherwise one is built (`pool`, `seed` as in [`nets::build_net`]).
#[allow(clippy::too_many_arguments)]
pub fn gen_lower_ddim(
    epsilon: f64,
    k: usize,
    d: usize,
    t: u32,
    kind: CostKind,
    net: Option<SphereNet>,
    pool: Option<usize>,
    seed: u64,
) -> Result<LowerBoundInstance> {
    check_range("epsilon", epsilon, "(0, 1/8)", epsilon > 0.0 && epsilon < 0.125)?;
    let scale = packing_scale(epsilon, kind);
    let net = match net {
        Some(net) => {
            if net.dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: net.dim,
                });
            }
            let min = nets::verify_packing(&net);
            if min < scale - nets::PACKING_TOL {
                return Err(Error::Invariant(format!(
                    "net packs at {min}, below the required {scale}"
                )));
            }
            net
        }
        None => nets::build_net(d, scale, pool, seed)?,
    };
    let inst = build_instance(epsilon, k, t, kind, net)?;
    if inst.spec.realized_n as usize > MAX_EXPLICIT_POINTS {
        return Err(Error::TooLarge {
            what: "lower-bound instance",
            n: inst.spec.realized_n as usize,
            cap: MAX_EXPLICIT_POINTS,
        });
    }
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    /// All site balls are pairwise disjoint (closed balls may touch).
    pub balls_disjoint: bool,
    /// Every site's nearest apex is its own.
    pub voronoi_ok: bool,
    /// Φ(apexes, X) recomputed from the sites.
    pub apex_cost_evaluated: f64,
    /// Size of the heuristic adversary: fewer than half the sites.
    pub adversary_size: Option<usize>,
    /// Cost of the adversary found by local search.
    pub adversary_cost: Option<f64>,
    /// adversary_cost > ε·Φ(apexes, X), which upper-bounds ε·Δ_k.
    pub adversary_beaten: Option<bool>,
}

/// Exact structural checks plus a heuristic adversary (greedy selection
/// among the sites followed by swap local search).
pub fn certify_lower_bound(inst: &LowerBoundInstance, swap_rounds: usize) -> Result<LowerBoundCertificate> {
    let pts = inst.sites.points();
    let radius: Vec<f64> = inst.site_level.iter().map(|&l| inst.ball_radius(l)).collect();
    let mut disjoint = true;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dist = sq_dist(pts[i].coords(), pts[j].coords()).sqrt();
            if dist < (radius[i] + radius[j]) * (1.0 - crate::REL_TOL) {
                disjoint = false;
            }
        }
    }
    let voronoi_ok = pts
        .iter()
        .zip(&inst.site_apex)
        .all(|(p, &a)| nearest(p.coords(), &inst.apexes).0 == a);
    let apex_cost_evaluated = evaluate_weighted(&inst.apex_centers(), &inst.sites, inst.spec.kind)?;

    let (adversary_size, adversary_cost, adversary_beaten) = if pts.len() <= ADVERSARY_MAX_SITES && pts.len() >= 2 {
        let size = pts.len().div_ceil(2) - 1;
        let cost = local_search_adversary(&inst.sites, size.max(1), inst.spec.kind, swap_rounds);
        let beaten = cost > inst.spec.epsilon * inst.spec.apex_cost;
        (Some(size), Some(cost), Some(beaten))
    } else {
        (None, None, None)
    };
    Ok(LowerBoundCertificate {
        balls_disjoint: disjoint,
        voronoi_ok,
        apex_cost_evaluated,
        adversary_size,
        adversary_cost,
        adversary_beaten,
    })
}

/// Cost of a `size`-subset of the sites chosen greedily and improved by
/// first-improvement swaps; candidates are the sites themselves.
fn local_search_adversary(sites: &WeightedSet, size: usize, kind: CostKind, rounds: usize) -> f64 {
    let pts = sites.points();
    let w = sites.weights();
    let n = pts.len();
    let dist: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| pts.iter().map(|b| kind.from_sq(sq_dist(a.coords(), b.coords()))).collect())
        .collect();
    let cost_of = |chosen: &[usize]| -> f64 {
        (0..n)
            .map(|x| w[x] * chosen.iter().map(|&c| dist[x][c]).fold(f64::INFINITY, f64::min))
            .sum()
    };
    let mut chosen: Vec<usize> = Vec::with_capacity(size);
    let mut best_d = vec![f64::INFINITY; n];
    for _ in 0..size {
        let pick = (0..n)
            .filter(|c| !chosen.contains(c))
            .map(|c| {
                let gain: f64 = (0..n).map(|x| w[x] * dist[x][c].min(best_d[x])).sum();
                (gain, c)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("size < n");
        chosen.push(pick.1);
        for x in 0..n {
            best_d[x] = best_d[x].min(dist[x][pick.1]);
        }
    }
    let mut current = cost_of(&chosen);
    for _ in 0..rounds {
        let mut improved = false;
        for slot in 0..chosen.len() {
            for cand in 0..n {
                if chosen.contains(&cand) {
                    continue;
                }
                let old = chosen[slot];
                chosen[slot] = cand;
                let c = cost_of(&chosen);
                if c < current {
                    current = c;
                    improved = true;
                } else {
                    chosen[slot] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    current
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RandomSpec {
    /// Uniform in [lo, hi]^d.
    UniformBox { n: usize, d: usize, lo: f64, hi: f64 },
    /// Uniform in the ball of `radius` around the origin.
    Ball { n: usize, d: usize, radius: f64 },
    /// k centers uniform in [−spread, spread]^d; each point picks a center
    /// uniformly and adds N(0, σ²) noise per coordinate.
    GaussianMixture { n: usize, d: usize, k: usize, sigma: f64, spread: f64 },
    /// k clusters of `per_cluster` points uniform in balls of `radius`,
    /// centers on the first axis `separation × max(radius, 1)` apart.
    SeparatedClusters { k: usize, per_cluster: usize, d: usize, radius: f64, separation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInstance {
    pub data: Dataset,
    /// Generating component of each point.
    pub labels: Vec<usize>,
    pub centers: Vec<Point>,
}

fn in_ball(d: usize, radius: f64, r: &mut rng::Rng) -> Vec<f64> {
    let u = nets::random_unit(d, r);
    let s = radius * r.random::<f64>().powf(1.0 / d as f64);
    u.into_iter().map(|x| x * s).collect()
}

/// Reproducible random data.
pub fn gen_random(spec: &RandomSpec, seed: u64) -> Result<RandomInstance> {
    let mut r = rng::seeded(seed);
    let positive = |name: &'static str, v: usize| {
        if v == 0 {
            Err(Error::OutOfRange {
                name,
                value: 0.0,
                range: "[1, inf)",
            })
        } else {
            Ok(())
        }
    };
    match *spec {
        RandomSpec::UniformBox { n, d, lo, hi } => {
            positive("n", n)?;
            positive("d", d)?;
            check_range("hi", hi, "[lo, inf)", hi >= lo && lo.is_finite())?;
            let rows = (0..n)
                .map(|_| (0..d).map(|_| if hi > lo { r.random_range(lo..hi) } else { lo }).collect())
                .collect();
            Ok(RandomInstance {
                data: Dataset::from_rows(rows)?,
                labels: vec![0; n],
                centers: vec![Point::new(vec![(lo + hi) / 2.0; d])?],
            })
        }
        RandomSpec::Ball { n, d, radius } => {
            positive("n", n)?;
            positive("d", d)?;
            check_range("radius", radius, "[0, inf)", radius >= 0.0)?;
            let rows = (0..n).map(|_| in_ball(d, radius, &mut r)).collect();
            Ok(RandomInstance {
                data: Dataset::from_rows(rows)?,
                labels: vec![0; n],
                centers: vec![Point::origin(d)],
            })
        }
        RandomSpec::GaussianMixture { n, d, k, sigma, spread } => {
            positive("n", n)?;
            positive("d", d)?;
            positive("k", k)?;
            check_range("sigma", sigma, "[0, inf)", sigma >= 0.0)?;
            check_range("spread", spread, "[0, inf)", spread >= 0.0)?;
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..d).map(|_| if spread > 0.0 { r.random_range(-spread..spread) } else { 0.0 }).collect())
                .collect();
            let mut labels = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let c = r.random_range(0..k);
                labels.push(c);
                rows.push(
                    centers[c]
                        .iter()
                        .map(|&m| m + sigma * r.sample::<f64, _>(StandardNormal))
                        .collect(),
                );
            }
            Ok(RandomInstance {
                data: Dataset::from_rows(rows)?,
                labels,
                centers: centers.into_iter().map(Point::new).collect::<Result<_>>()?,
            })
        }
        RandomSpec::SeparatedClusters { k, per_cluster, d, radius, separation } => {
            positive("k", k)?;
            positive("per_cluster", per_cluster)?;
            positive("d", d)?;
            check_range("radius", radius, "[0, inf)", radius >= 0.0)?;
            check_range("separation", separation, "(0, inf)", separation > 0.0)?;
            let gap = separation * radius.max(1.0);
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|j| {
                    let mut c = vec![0.0; d];
                    c[0] = gap * j as f64;
                    c
                })
                .collect();
            let mut labels = Vec::with_capacity(k * per_cluster);
            let mut rows = Vec::with_capacity(k * per_cluster);
            for (j, c) in centers.iter().enumerate() {
                for _ in 0..per_cluster {
                    labels.push(j);
                    rows.push(in_ball(d, radius, &mut r).iter().zip(c).map(|(a, b)| a + b).collect());
                }
            }
            Ok(RandomInstance {
                data: Dataset::from_rows(rows)?,
                labels,
                centers: centers.into_iter().map(Point::new).collect::<Result<_>>()?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cost, delta1};
    use crate::solvers::{enumerate_exact, exact_1d_profile, lloyd_multistart};

    #[test]
    fn ratio_values() {
        assert_eq!(lower_bound_ratio(1.0 / 32.0), 2);
        assert_eq!(lower_bound_ratio(1.0 / 16.0), 3);
    }

    #[test]
    fn small_1d_instance() {
        let inst = gen_lower_1d(1.0 / 32.0, 2, CostKind::Means).unwrap();
        assert_eq!(inst.spec.r, 2);
        assert_eq!(inst.spec.realized_n, 10);
        let data = inst.data.as_ref().unwrap();
        let mut xs = data.scalars().unwrap();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![-4.0, -2.0, -2.0, -2.0, -2.0, 2.0, 2.0, 2.0, 2.0, 4.0]);
        let origin = CenterSet::from_scalars(&[0.0]).unwrap();
        assert_eq!(cost(&origin, data, CostKind::Means).unwrap(), 64.0);
        assert_eq!(inst.spec.apex_cost, 64.0);
        assert_eq!(delta1(data, CostKind::Means), 64.0);
    }

    #[test]
    fn base_case_has_two_points() {
        let inst = gen_lower_1d(0.05, 1, CostKind::Means).unwrap();
        let xs = inst.data.unwrap().scalars().unwrap();
        assert_eq!(xs, vec![-(inst.spec.r as f64), inst.spec.r as f64]);
    }

    #[test]
    fn range_and_overflow_guards() {
        assert!(gen_lower_1d(0.125, 2, CostKind::Means).is_err());
        assert!(gen_lower_1d(0.0, 2, CostKind::Means).is_err());
        assert!(gen_lower_1d(0.05, 0, CostKind::Means).is_err());
        assert!(matches!(gen_lower_1d(0.1, 200, CostKind::Means), Err(Error::Overflow(_))));
    }

    #[test]
    fn huge_1d_instance_stays_compressed() {
        let inst = gen_lower_1d(1.0 / 32.0, 12, CostKind::Means).unwrap();
        assert!(inst.data.is_none());
        assert_eq!(inst.sites.len(), 24);
        let v = evaluate_weighted(&inst.apex_centers(), &inst.sites, CostKind::Means).unwrap();
        assert_eq!(v, inst.spec.apex_cost);
    }

    #[test]
    fn certificate_1d_lower_bound() {
        for eps in [1.0 / 32.0, 1.0 / 16.0] {
            for t in 1..=3u32 {
                let inst = gen_lower_1d(eps, t, CostKind::Means).unwrap();
                let data = inst.data.as_ref().unwrap();
                let p = exact_1d_profile(data, (t as usize + 1).min(data.len()), CostKind::Means).unwrap();
                let d1 = p[0].value;
                assert_eq!(d1, 2.0 * t as f64 * (inst.spec.r as f64).powi(2 * t as i32));
                assert!(p[t as usize - 1].value > eps * d1);
                let cert = certify_lower_bound(&inst, 5).unwrap();
                assert!(cert.balls_disjoint && cert.voronoi_ok);
                assert_eq!(cert.adversary_beaten, Some(true));
            }
        }
    }

    #[test]
    fn ddim_reduces_to_1d() {
        let a = gen_lower_ddim(1.0 / 32.0, 1, 1, 2, CostKind::Means, None, None, 0).unwrap();
        let b = gen_lower_1d(1.0 / 32.0, 2, CostKind::Means).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn ddim_two_apexes() {
        let inst = gen_lower_ddim(1.0 / 32.0, 2, 2, 1, CostKind::Means, None, None, 0).unwrap();
        let m = inst.spec.net_size as u64;
        assert_eq!(inst.spec.realized_n, 2 * m);
        assert_eq!(inst.spec.apex_cost, 8.0 * m as f64);
        let data = inst.data.as_ref().unwrap();
        let v = cost(&inst.apex_centers(), data, CostKind::Means).unwrap();
        assert!((v - inst.spec.apex_cost).abs() <= 1e-9 * v);
        assert!(inst.spec.apex_spacing > (inst.spec.realized_n as f64).powi(2));
        let cert = certify_lower_bound(&inst, 3).unwrap();
        assert!(cert.balls_disjoint && cert.voronoi_ok);
        assert_eq!(cert.adversary_beaten, Some(true));
    }

    #[test]
    fn ddim_rejects_loose_net() {
        let loose = nets::build_net(2, 0.2, None, 0).unwrap();
        assert!(gen_lower_ddim(1.0 / 32.0, 1, 2, 1, CostKind::Means, Some(loose), None, 0).is_err());
    }

    #[test]
    fn median_instance() {
        let inst = gen_lower_1d(1.0 / 32.0, 2, CostKind::Median).unwrap();
        let data = inst.data.as_ref().unwrap();
        assert_eq!(inst.spec.realized_n, 6);
        assert_eq!(delta1(data, CostKind::Median), 2.0 * 2.0 * 4.0);
        let cert = certify_lower_bound(&inst, 5).unwrap();
        assert!(cert.balls_disjoint && cert.voronoi_ok);
    }

    #[test]
    fn random_families() {
        let g = gen_random(&RandomSpec::GaussianMixture { n: 20, d: 3, k: 1, sigma: 0.0, spread: 5.0 }, 1).unwrap();
        assert!(g.data.iter().all(|p| p == &g.centers[0]));
        let spec = RandomSpec::SeparatedClusters { k: 3, per_cluster: 10, d: 2, radius: 0.0, separation: 100.0 };
        let s = gen_random(&spec, 2).unwrap();
        assert_eq!(s, gen_random(&spec, 2).unwrap());
        let l = lloyd_multistart(&s.data, 3, 5, 0, CostKind::Means).unwrap();
        assert_eq!(l.value, 0.0);
        let reps = s.data.select(&[0, 1, 10, 11, 20, 21]).unwrap();
        assert_eq!(enumerate_exact(&reps, 3, CostKind::Means).unwrap().value, 0.0);
        assert!(gen_random(&RandomSpec::UniformBox { n: 0, d: 2, lo: 0.0, hi: 1.0 }, 0).is_err());
    }

    #[test]
    fn separated_clusters_respect_separation() {
        let spec = RandomSpec::SeparatedClusters { k: 4, per_cluster: 25, d: 3, radius: 2.0, separation: 10.0 };
        let s = gen_random(&spec, 7).unwrap();
        let mut max_r: f64 = 0.0;
        for (p, &l) in s.data.iter().zip(&s.labels) {
            max_r = max_r.max(sq_dist(p.coords(), s.centers[l].coords()).sqrt());
        }
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(sq_dist(s.centers[i].coords(), s.centers[j].coords()).sqrt() >= 10.0 * max_r);
            }
        }
    }
}
