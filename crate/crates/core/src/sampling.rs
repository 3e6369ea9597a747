//! D² sampling (k-means++ seeding), continued past k centers.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::geometry::{sq_dist, CostKind, Dataset};
use crate::rng::{self, Rng};
use crate::solvers::{self, Oracle};

/// Below this size the mass update runs sequentially.
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingTrace {
    /// Indices of the chosen points, in pick order.
    pub chosen: Vec<usize>,
    /// `cost_after[i]` is the cost of the first `i + 1` picks.
    pub cost_after: Vec<f64>,
    pub seed: u64,
    /// The remaining mass hit zero before all requested picks were made.
    pub early_stop: bool,
}

impl SeedingTrace {
    pub fn final_cost(&self) -> f64 {
        *self.cost_after.last().expect("at least one pick")
    }
}

fn update_mass(data: &Dataset, mass: &mut [f64], center: usize, kind: CostKind) {
    let c = data.point(center).coords();
    let step = |(m, x): (&mut f64, &crate::geometry::Point)| {
        let v = kind.from_sq(sq_dist(x.coords(), c));
        if v < *m {
            *m = v;
        }
    };
    if mass.len() >= PAR_THRESHOLD {
        mass.par_iter_mut().zip(data.points().par_iter()).for_each(step);
    } else {
        mass.iter_mut().zip(data.points()).for_each(step);
    }
}

/// Index drawn with probability proportional to `mass`, by inverting the
/// cumulative sum. Zero-mass entries are never returned.
fn draw(mass: &[f64], total: f64, rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last_positive = i;
            if acc > u {
                return i;
            }
        }
    }
    // rounding can leave u just above the accumulated total
    last_positive
}

/// D² sampling driven by an external generator. `first` forces the first
/// pick; otherwise it is uniform. Assumes `1 <= m <= n`.
pub(crate) fn d2_sample_with(
    data: &Dataset,
    m: usize,
    kind: CostKind,
    first: Option<usize>,
    rng: &mut Rng,
) -> SeedingTrace {
    let n = data.len();
    let first = first.unwrap_or_else(|| rng.random_range(0..n));
    let mut mass = vec![f64::INFINITY; n];
    let mut chosen = Vec::with_capacity(m);
    let mut cost_after = Vec::with_capacity(m);
    let mut next = first;
    let mut early_stop = false;
    loop {
        chosen.push(next);
        update_mass(data, &mut mass, next, kind);
        let total: f64 = mass.iter().sum();
        cost_after.push(total);
        if chosen.len() == m {
            break;
        }
        if total <= 0.0 {
            early_stop = true;
            break;
        }
        next = draw(&mass, total, rng);
    }
    SeedingTrace {
        chosen,
        cost_after,
        seed: 0,
        early_stop,
    }
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        Err(Error::InvalidK { k: m, n })
    } else {
        Ok(())
    }
}

/// Pick up to `m` centers by D² sampling: the first uniformly, each later one
/// with probability proportional to its current distance (raised to the cost
/// exponent) from the chosen set. Stops early, flagged, once every point is
/// covered at zero cost.
pub fn d2_sample(data: &Dataset, m: usize, kind: CostKind, seed: u64) -> Result<SeedingTrace> {
    check_m(m, data.len())?;
    let mut trace = d2_sample_with(data, m, kind, None, &mut rng::seeded(seed));
    trace.seed = seed;
    Ok(trace)
}

/// As [`d2_sample`] with the first center fixed to `first`.
pub fn d2_sample_from(
    data: &Dataset,
    m: usize,
    kind: CostKind,
    first: usize,
    seed: u64,
) -> Result<SeedingTrace> {
    check_m(m, data.len())?;
    if first >= data.len() {
        return Err(Error::IndexOutOfBounds {
            index: first,
            size: data.len(),
        });
    }
    let mut trace = d2_sample_with(data, m, kind, Some(first), &mut rng::seeded(seed));
    trace.seed = seed;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverseedReport {
    pub k: usize,
    pub epsilon: f64,
    pub c_const: f64,
    /// Sample size, L estimated at ε / c_const.
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub delta_k: f64,
    pub threshold: f64,
    /// Whether Δ_k and m came from an exact oracle.
    pub exact: bool,
    pub final_costs: Vec<f64>,
    /// Mean over trials of the cost after each pick (early-stopped traces
    /// hold their final value).
    pub mean_decay: Vec<f64>,
}

/// Over-seeding experiment: draw `trials` independent D² samples of size
/// m = L(ε / c_const) and count how often the sample costs at most ε·Δ_k.
#[allow(clippy::too_many_arguments)]
pub fn overseed_experiment(
    data: &Dataset,
    k: usize,
    epsilon: f64,
    c_const: f64,
    trials: usize,
    seed: u64,
    kind: CostKind,
    oracle: Oracle,
) -> Result<OverseedReport> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    check_range("c_const", c_const, "[1, inf)", c_const >= 1.0)?;
    if trials == 0 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let oracle = oracle.resolve(data);
    let est = solvers::estimate_l(data, k, epsilon / c_const, kind, oracle)?;
    let delta_k = solvers::delta_k(data, k, kind, oracle)?;
    let threshold = epsilon * delta_k;
    let m = est.l_hat;

    let traces: Vec<SeedingTrace> = (0..trials)
        .into_par_iter()
        .map(|t| d2_sample_with(data, m, kind, None, &mut rng::stream(seed, t as u64)))
        .collect();

    let final_costs: Vec<f64> = traces.iter().map(SeedingTrace::final_cost).collect();
    let successes = final_costs
        .iter()
        .filter(|&&c| crate::leq_rel(c, threshold))
        .count();
    let mean_decay = (0..m)
        .map(|i| {
            traces
                .iter()
                .map(|t| t.cost_after.get(i).copied().unwrap_or_else(|| t.final_cost()))
                .sum::<f64>()
                / trials as f64
        })
        .collect();
    Ok(OverseedReport {
        k,
        epsilon,
        c_const,
        m,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        delta_k,
        threshold,
        exact: est.exact,
        final_costs,
        mean_decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(xs: &[f64]) -> Dataset {
        Dataset::from_scalars(xs).unwrap()
    }

    #[test]
    fn identical_points_stop_early() {
        let x = ds(&[3.0; 5]);
        let t = d2_sample(&x, 4, CostKind::Means, 1).unwrap();
        assert_eq!(t.cost_after, vec![0.0]);
        assert!(t.early_stop);
        assert_eq!(t.chosen.len(), 1);
    }

    #[test]
    fn two_points_second_pick_is_forced() {
        let x = ds(&[0.0, 10.0]);
        for seed in 0..20 {
            let t = d2_sample(&x, 2, CostKind::Means, seed).unwrap();
            assert_ne!(t.chosen[0], t.chosen[1]);
            assert_eq!(t.final_cost(), 0.0);
            assert!(!t.early_stop);
        }
    }

    #[test]
    fn traces_are_deterministic() {
        let x = ds(&[0.0, 1.0, 5.0, 9.0, -3.0, 2.5]);
        let a = d2_sample(&x, 4, CostKind::Median, 77).unwrap();
        assert_eq!(a, d2_sample(&x, 4, CostKind::Median, 77).unwrap());
        assert_eq!(a.seed, 77);
    }

    #[test]
    fn bad_m_is_rejected() {
        let x = ds(&[0.0, 1.0]);
        assert!(d2_sample(&x, 0, CostKind::Means, 0).is_err());
        assert!(d2_sample(&x, 3, CostKind::Means, 0).is_err());
    }

    #[test]
    fn full_overseed_reaches_zero() {
        let x = ds(&[0.0, 1.0, 4.0, 9.0, 16.0]);
        let t = d2_sample(&x, 5, CostKind::Means, 3).unwrap();
        assert_eq!(t.final_cost(), 0.0);
        let mut c = t.chosen.clone();
        c.sort();
        assert_eq!(c, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn overseed_with_k_equal_n_always_succeeds() {
        let x = ds(&[0.0, 1.0, 4.0, 9.0]);
        let r = overseed_experiment(&x, 4, 1.0, 1.0, 20, 0, CostKind::Means, Oracle::Dp1d).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.m, 4);
        assert!(r.exact);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cost_after_is_non_increasing(
                rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 1..30),
                m in 1usize..30,
                seed: u64,
                median: bool,
            ) {
                let x = Dataset::from_rows(rows).unwrap();
                let m = m.min(x.len());
                let kind = if median { CostKind::Median } else { CostKind::Means };
                let t = d2_sample(&x, m, kind, seed).unwrap();
                prop_assert_eq!(t.chosen.len(), t.cost_after.len());
                for w in t.cost_after.windows(2) {
                    prop_assert!(w[1] <= w[0]);
                }
                let centers = crate::cost::CenterSet::new(
                    t.chosen.iter().map(|&i| x.point(i).clone()).collect()).unwrap();
                let direct = crate::cost::cost(&centers, &x, kind).unwrap();
                prop_assert!((direct - t.final_cost()).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }
}
