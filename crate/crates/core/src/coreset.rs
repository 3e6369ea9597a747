//! Weighted coresets from point sets: the nearest-point weighting, the
//! geometric-coreset check, and a Monte-Carlo validator of the (1 ± ε)
//! guarantee over candidate center sets.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{cost, evaluate_weighted, mean_of, nearest, CenterSet};
use crate::error::{check_range, Error, Result};
use crate::geometry::{CostKind, Dataset, Point, WeightedSet};
use crate::rng;
use crate::sampling;
use crate::solvers::{self, Oracle};

/// w(s) = number of points of `data` whose nearest point of `s` is s (ties
/// to the lowest index). Points that attract nothing keep weight 0.
pub fn weigh(s: &CenterSet, data: &Dataset) -> Result<WeightedSet> {
    if s.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: s.dim(),
        });
    }
    let mut w = vec![0.0; s.len()];
    for x in data {
        w[nearest(x.coords(), s.centers()).0] += 1.0;
    }
    WeightedSet::new(s.centers().to_vec(), w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricCheck {
    pub cost: f64,
    pub delta_k: f64,
    /// Φ(S, X) / Δ_k(X); infinite when Δ_k = 0 < Φ(S, X).
    pub ratio: f64,
    pub epsilon: f64,
    pub pass: bool,
    /// Δ_k came from an exact oracle.
    pub exact: bool,
}

/// Whether Φ(S, X) ≤ ε·Δ_k(X).
pub fn check_geometric(
    s: &CenterSet,
    data: &Dataset,
    k: usize,
    epsilon: f64,
    kind: CostKind,
    oracle: Oracle,
) -> Result<GeometricCheck> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    let c = cost(s, data, kind)?;
    let oracle = oracle.resolve(data);
    let delta_k = solvers::delta_k(data, k, kind, oracle)?;
    let ratio = if delta_k > 0.0 {
        c / delta_k
    } else if c == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GeometricCheck {
        cost: c,
        delta_k,
        ratio,
        epsilon,
        pass: crate::leq_rel(c, epsilon * delta_k),
        exact: oracle.is_exact(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterSource {
    /// Uniform in the bounding box of the data.
    Random,
    /// One D²-seeded Lloyd run.
    Lloyd,
    /// Centroids of random subsets of the data.
    SubsetCentroids,
    /// Far-field centers: box center plus random directions at 10–10⁴
    /// bounding-box diameters.
    AdversarialGrid,
}

pub const SOURCES: [CenterSource; 4] = [
    CenterSource::Random,
    CenterSource::Lloyd,
    CenterSource::SubsetCentroids,
    CenterSource::AdversarialGrid,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetCertificate {
    pub epsilon: f64,
    pub k: usize,
    pub trials: usize,
    /// Trials with Φ(C, X) > 0 (the others are skipped).
    pub evaluated: usize,
    pub worst_relative_error: f64,
    pub worst_source: Option<CenterSource>,
    pub pass: bool,
    pub center_sources: Vec<CenterSource>,
    pub coreset_size: usize,
    /// Sampling constant, when the coreset came from D² sampling.
    pub beta: Option<f64>,
}

fn candidate(data: &Dataset, k: usize, source: CenterSource, trial: usize, seed: u64, kind: CostKind) -> Vec<Point> {
    let mut r = rng::stream(seed, trial as u64);
    let (lo, hi) = data.bounding_box();
    let d = data.dim();
    match source {
        CenterSource::Random => (0..k)
            .map(|_| {
                let c = (0..d)
                    .map(|j| if hi[j] > lo[j] { r.random_range(lo[j]..=hi[j]) } else { lo[j] })
                    .collect();
                Point::new(c).expect("finite")
            })
            .collect(),
        CenterSource::Lloyd => solvers::lloyd_multistart(data, k.min(data.len()), 1, r.random(), kind)
            .expect("k checked")
            .centers
            .into_points(),
        CenterSource::SubsetCentroids => (0..k)
            .map(|_| {
                let size = r.random_range(1..=data.len());
                let idx = sample(&mut r, data.len(), size);
                let pts: Vec<&Point> = idx.iter().map(|i| data.point(i)).collect();
                Point::new(mean_of(d, pts)).expect("finite")
            })
            .collect(),
        CenterSource::AdversarialGrid => {
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / 2.0).collect();
            let dia = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
                .max(1.0);
            (0..k)
                .map(|_| {
                    let u = crate::nets::random_unit(d, &mut r);
                    let dist = dia * 10f64.powf(r.random_range(1.0..4.0));
                    Point::new(mid.iter().zip(&u).map(|(m, x)| m + dist * x).collect()).expect("finite")
                })
                .collect()
        }
    }
}

/// Worst relative error |Φ(C, S, w) − Φ(C, X)| / Φ(C, X) over `trials`
/// candidate k-center sets, cycling through [`SOURCES`]. Candidates with
/// Φ(C, X) = 0 are skipped. Passes iff at least one candidate was evaluated
/// and the worst error is at most ε (+1e−9).
#[allow(clippy::too_many_arguments)]
pub fn validate_coreset(
    data: &Dataset,
    coreset: &WeightedSet,
    k: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
    kind: CostKind,
) -> Result<CoresetCertificate> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    if k == 0 {
        return Err(Error::InvalidK { k, n: data.len() });
    }
    if coreset.dim().is_some_and(|d| d != data.dim()) {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: coreset.dim().unwrap_or(0),
        });
    }
    let results: Vec<Option<(f64, CenterSource)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let source = SOURCES[t % SOURCES.len()];
            let centers = CenterSet::new(candidate(data, k, source, t, seed, kind)).expect("k >= 1");
            let full = cost(&centers, data, kind).expect("dims match");
            if full == 0.0 {
                return None;
            }
            let approx = evaluate_weighted(&centers, coreset, kind).expect("dims match");
            Some(((approx - full).abs() / full, source))
        })
        .collect();
    let evaluated = results.iter().flatten().count();
    let worst = results
        .iter()
        .flatten()
        .fold(None::<(f64, CenterSource)>, |acc, &(e, s)| match acc {
            Some((w, _)) if w >= e => acc,
            _ => Some((e, s)),
        });
    let worst_relative_error = worst.map_or(0.0, |w| w.0);
    let mut center_sources: Vec<CenterSource> = SOURCES.iter().copied().take(trials.min(SOURCES.len())).collect();
    center_sources.sort_by_key(|s| SOURCES.iter().position(|x| x == s));
    Ok(CoresetCertificate {
        epsilon,
        k,
        trials,
        evaluated,
        worst_relative_error,
        worst_source: worst.map(|w| w.1),
        pass: evaluated > 0 && worst_relative_error <= epsilon + 1e-9,
        center_sources,
        coreset_size: coreset.len(),
        beta: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2Coreset {
    pub coreset: WeightedSet,
    pub beta: f64,
    /// Sample size: L estimated at min(1, ε²/β).
    pub m: usize,
    pub exact_l: bool,
    pub trace: sampling::SeedingTrace,
}

/// Weighted coreset from D² sampling: draw m = L(k, ε²/β) centers (the
/// sampling constant β is not pinned down by theory; 1 is the default) and
/// weigh them against the data.
pub fn build_d2_coreset(
    data: &Dataset,
    k: usize,
    epsilon: f64,
    beta: f64,
    seed: u64,
    kind: CostKind,
    oracle: Oracle,
) -> Result<D2Coreset> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    check_range("beta", beta, "(0, inf)", beta > 0.0)?;
    let target = (epsilon * epsilon / beta).min(1.0);
    let est = solvers::estimate_l(data, k, target, kind, oracle)?;
    let trace = sampling::d2_sample(data, est.l_hat, kind, seed)?;
    let centers = CenterSet::new(trace.chosen.iter().map(|&i| data.point(i).clone()).collect())?;
    Ok(D2Coreset {
        coreset: weigh(&centers, data)?,
        beta,
        m: est.l_hat,
        exact_l: est.exact,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_1d_upper, build_fan_coreset, cells_from_centers, NetSource};
    use crate::generators::{gen_random, RandomSpec};

    #[test]
    fn weigh_examples() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 2.0, 10.0]).unwrap();
        let s = CenterSet::from_scalars(&[1.0, 10.0]).unwrap();
        assert_eq!(weigh(&s, &x).unwrap().weights(), &[3.0, 1.0]);
        let same = weigh(&CenterSet::from(&x), &x).unwrap();
        assert!(same.weights().iter().all(|&w| w == 1.0));
        let unused = CenterSet::from_scalars(&[1.0, 1000.0, 10.0]).unwrap();
        assert_eq!(weigh(&unused, &x).unwrap().weights(), &[3.0, 0.0, 1.0]);
    }

    #[test]
    fn geometric_examples() {
        let x = Dataset::from_scalars(&[-3.0, -1.0, 0.0, 2.0, 5.0]).unwrap();
        let all = CenterSet::from(&x);
        let g = check_geometric(&all, &x, 2, 0.1, CostKind::Means, Oracle::Dp1d).unwrap();
        assert_eq!(g.ratio, 0.0);
        assert!(g.pass);
        let far = CenterSet::from_scalars(&[1e6]).unwrap();
        assert!(!check_geometric(&far, &x, 1, 1.0, CostKind::Means, Oracle::Dp1d).unwrap().pass);

        // the line grid around the optimal single center certifies k = 1
        let xs = x.scalars().unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let shifted: Vec<f64> = xs.iter().map(|v| v - mean).collect();
        let grid = build_1d_upper(&shifted, 0.5, CostKind::Means).unwrap();
        let s = CenterSet::from_scalars(&grid.points.iter().map(|p| p + mean).collect::<Vec<_>>()).unwrap();
        assert!(check_geometric(&s, &x, 1, 0.5, CostKind::Means, Oracle::Dp1d).unwrap().pass);

        let dup = Dataset::from_scalars(&[4.0, 4.0]).unwrap();
        let off = CenterSet::from_scalars(&[5.0]).unwrap();
        let g = check_geometric(&off, &dup, 1, 1.0, CostKind::Means, Oracle::Dp1d).unwrap();
        assert!(g.ratio.is_infinite() && !g.pass);
    }

    #[test]
    fn identity_coreset_is_exact() {
        let inst = gen_random(&RandomSpec::UniformBox { n: 50, d: 2, lo: -1.0, hi: 1.0 }, 4).unwrap();
        let c = validate_coreset(&inst.data, &WeightedSet::unit(&inst.data), 3, 0.1, 40, 1, CostKind::Means).unwrap();
        assert_eq!(c.worst_relative_error, 0.0);
        assert!(c.pass);
        assert_eq!(c.evaluated, 40);
        assert_eq!(c.center_sources.len(), 4);
    }

    #[test]
    fn no_trials_fails() {
        let x = Dataset::from_scalars(&[0.0, 1.0]).unwrap();
        let c = validate_coreset(&x, &WeightedSet::unit(&x), 1, 0.5, 0, 0, CostKind::Means).unwrap();
        assert_eq!(c.trials, 0);
        assert!(!c.pass);
    }

    #[test]
    fn fan_pipeline_passes() {
        let inst = gen_random(&RandomSpec::GaussianMixture { n: 150, d: 2, k: 2, sigma: 1.0, spread: 8.0 }, 9).unwrap();
        let eps = 0.5;
        let lloyd = solvers::lloyd_multistart(&inst.data, 2, 3, 0, CostKind::Means).unwrap();
        let cells = cells_from_centers(&lloyd.centers, &inst.data);
        let fan = build_fan_coreset(&inst.data, &cells, eps * eps / 32.0, CostKind::Means, &NetSource::Build { pool: Some(0), seed: 0 }).unwrap();
        assert!(fan.holds());
        let w = weigh(&fan.center_set().unwrap(), &inst.data).unwrap();
        assert_eq!(w.total_weight(), 150.0);
        let cert = validate_coreset(&inst.data, &w, 2, eps, 200, 5, CostKind::Means).unwrap();
        assert!(cert.pass, "worst {}", cert.worst_relative_error);
    }

    #[test]
    fn d2_coreset_reports_beta() {
        let x = Dataset::from_scalars(&[0.0, 0.1, 5.0, 5.2, 9.0, 9.1, 9.3]).unwrap();
        let c = build_d2_coreset(&x, 2, 0.5, 1.0, 3, CostKind::Means, Oracle::Dp1d).unwrap();
        assert_eq!(c.beta, 1.0);
        assert_eq!(c.coreset.total_weight(), 7.0);
        assert!(c.m >= 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weights_partition_the_data(
                rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..40),
                centers in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..8),
            ) {
                let x = Dataset::from_rows(rows).unwrap();
                let s = CenterSet::new(centers.into_iter().map(|c| Point::new(c).unwrap()).collect()).unwrap();
                let w = weigh(&s, &x).unwrap();
                prop_assert_eq!(w.total_weight(), x.len() as f64);
                prop_assert_eq!(w.len(), s.len());
            }

            #[test]
            fn zero_weights_do_not_matter(
                rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..20),
                extra in prop::collection::vec(-50.0f64..50.0, 2),
                c in prop::collection::vec(-5.0f64..5.0, 2),
            ) {
                let x = Dataset::from_rows(rows).unwrap();
                let base = WeightedSet::unit(&x);
                let mut pts = base.points().to_vec();
                let mut ws = base.weights().to_vec();
                pts.push(Point::new(extra).unwrap());
                ws.push(0.0);
                let padded = WeightedSet::new(pts, ws).unwrap();
                let centers = CenterSet::single(Point::new(c).unwrap());
                prop_assert_eq!(
                    evaluate_weighted(&centers, &base, CostKind::Means).unwrap(),
                    evaluate_weighted(&centers, &padded, CostKind::Means).unwrap()
                );
            }
        }
    }
}
