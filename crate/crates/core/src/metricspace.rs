//! Covers of finite metrics: greedy r-covers, doubling-dimension and
//! covering-number estimates.
//!
//! Minimum covers are NP-hard; the greedy surrogate absorbs everything within
//! r/2 of an unassigned point, so every part has diameter at most r and the
//! cover size only ever over-counts the minimum.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::geometry::FiniteMetric;
use crate::leq_rel;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub radius: f64,
    /// Each part starts with the point that absorbed the rest.
    pub parts: Vec<Vec<usize>>,
    pub size: usize,
}

impl CoverResult {
    /// Exact check that every part has diameter at most `radius`.
    pub fn diameters_hold(&self, m: &FiniteMetric) -> bool {
        self.parts.iter().all(|p| leq_rel(m.diameter(p), self.radius))
    }
}

/// Greedy cover of `subset` by parts of diameter at most `r`: take the first
/// unassigned point and absorb every unassigned point within r/2 of it.
pub fn greedy_cover(m: &FiniteMetric, subset: &[usize], r: f64) -> CoverResult {
    let mut assigned = vec![false; subset.len()];
    let mut parts = Vec::new();
    for a in 0..subset.len() {
        if assigned[a] {
            continue;
        }
        let p = subset[a];
        let mut part = vec![p];
        assigned[a] = true;
        for b in a + 1..subset.len() {
            if !assigned[b] && m.d(p, subset[b]) <= r / 2.0 {
                assigned[b] = true;
                part.push(subset[b]);
            }
        }
        parts.push(part);
    }
    CoverResult {
        radius: r,
        size: parts.len(),
        parts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub d_hat: f64,
    /// Subsets examined (the whole space plus sampled balls).
    pub subsets: usize,
    /// Largest half-diameter cover found.
    pub worst_cover: usize,
}

/// Upper-bound style estimate of the doubling dimension: the largest
/// log₂ |greedy_cover(S, dia(S)/2)| over S = the whole space and
/// `sample_balls` random closed balls.
pub fn estimate_doubling(m: &FiniteMetric, sample_balls: usize, seed: u64) -> DoublingEstimate {
    let all = m.all_indices();
    let mut subsets = vec![all.clone()];
    subsets.extend(sample_balls_of(m, sample_balls, seed).into_iter().map(|(c, r)| m.ball(c, r, &all)));
    let worst = subsets
        .par_iter()
        .map(|s| {
            let dia = m.diameter(s);
            if dia == 0.0 {
                1
            } else {
                greedy_cover(m, s, dia / 2.0).size
            }
        })
        .max()
        .unwrap_or(1);
    DoublingEstimate {
        d_hat: (worst as f64).log2(),
        subsets: subsets.len(),
        worst_cover: worst,
    }
}

/// `count` (center, radius) pairs: a uniform center and the distance from it
/// to a uniform point, per pair drawn from its own stream.
fn sample_balls_of(m: &FiniteMetric, count: usize, seed: u64) -> Vec<(usize, f64)> {
    let n = m.size();
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let c = r.random_range(0..n);
            let q = r.random_range(0..n);
            (c, m.d(c, q))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub epsilon: f64,
    pub gamma_hat: usize,
    pub balls: usize,
    /// Every (center, radius) pair was examined.
    pub exhaustive: bool,
    pub worst_center: usize,
    pub worst_radius: f64,
}

/// γ̂_ε = max |greedy_cover(B(c, r), ε·r)| over balls B(c, r). With
/// `sample_balls` = 0 or at least n², every center paired with every
/// distinct distance from it is examined; otherwise that many random balls.
pub fn gamma_estimate(m: &FiniteMetric, epsilon: f64, sample_balls: usize, seed: u64) -> Result<GammaEstimate> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    let n = m.size();
    let exhaustive = sample_balls == 0 || sample_balls >= n.saturating_mul(n);
    let balls: Vec<(usize, f64)> = if exhaustive {
        (0..n)
            .flat_map(|c| {
                let mut radii: Vec<f64> = m.row(c).to_vec();
                radii.sort_by(f64::total_cmp);
                radii.dedup();
                radii.into_iter().map(move |r| (c, r))
            })
            .collect()
    } else {
        sample_balls_of(m, sample_balls, seed)
    };
    let all = m.all_indices();
    let (gamma_hat, worst_center, worst_radius) = balls
        .par_iter()
        .map(|&(c, r)| (greedy_cover(m, &m.ball(c, r, &all), epsilon * r).size, c, r))
        .reduce(
            || (0, 0, 0.0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
        );
    Ok(GammaEstimate {
        epsilon,
        gamma_hat,
        balls: balls.len(),
        exhaustive,
        worst_center,
        worst_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftCheck {
    pub bound: f64,
    pub holds: bool,
}

/// Warn-only comparison γ̂_ε ≤ (4/ε)^(d̂ + slack); both sides are estimates.
pub fn covering_number_check(gamma_hat: usize, epsilon: f64, d_hat: f64, slack: f64) -> SoftCheck {
    let bound = (4.0 / epsilon).powf(d_hat + slack);
    SoftCheck {
        bound,
        holds: gamma_hat as f64 <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dataset;

    fn line(n: usize) -> FiniteMetric {
        FiniteMetric::from_dataset(&Dataset::from_scalars(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap())
    }

    #[test]
    fn uniform_metric_cover_is_singletons() {
        let m = FiniteMetric::uniform(5, 1.0);
        let c = greedy_cover(&m, &m.all_indices(), 0.9);
        assert_eq!(c.size, 5);
        assert!(c.diameters_hold(&m));
    }

    #[test]
    fn line_cover_trace() {
        let m = line(8);
        let c = greedy_cover(&m, &m.all_indices(), 3.5);
        assert_eq!(c.parts, vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        assert!(c.diameters_hold(&m));
        let whole = greedy_cover(&m, &m.all_indices(), 14.0);
        assert_eq!(whole.size, 1);
    }

    #[test]
    fn doubling_examples() {
        let u = FiniteMetric::uniform(8, 1.0);
        assert_eq!(estimate_doubling(&u, 10, 0).d_hat, 3.0);
        let one = FiniteMetric::uniform(1, 1.0);
        assert_eq!(estimate_doubling(&one, 5, 0).d_hat, 0.0);
        for n in [2, 5, 16, 40] {
            assert!(estimate_doubling(&line(n), 50, 1).d_hat <= 2.0);
        }
    }

    #[test]
    fn gamma_examples() {
        let u = FiniteMetric::uniform(6, 1.0);
        let g = gamma_estimate(&u, 0.5, 0, 0).unwrap();
        assert_eq!(g.gamma_hat, 6);
        assert!(g.exhaustive);
        let l = line(16);
        let g = gamma_estimate(&l, 0.5, 0, 0).unwrap();
        assert!(g.gamma_hat >= 1 && g.gamma_hat <= 64);
        let almost_one = gamma_estimate(&l, 1.0, 30, 3).unwrap();
        assert!(almost_one.gamma_hat >= 1);
        assert!(!almost_one.exhaustive);
        assert!(gamma_estimate(&l, 0.0, 0, 0).is_err());
    }

    #[test]
    fn soft_bound_on_line() {
        let l = line(20);
        let d = estimate_doubling(&l, 40, 2).d_hat;
        let g = gamma_estimate(&l, 0.5, 0, 0).unwrap();
        assert!(covering_number_check(g.gamma_hat, 0.5, d, 1.0).holds);
    }

    /// Greedy absorption is order-sensitive, so a larger radius can produce
    /// more parts.
    #[test]
    fn greedy_size_is_not_monotone_in_r() {
        let rows = vec![vec![9.0, 0.0], vec![4.0, 3.0], vec![0.0, 2.0], vec![5.0, 7.0], vec![5.0, 6.0]];
        let m = FiniteMetric::from_dataset(&Dataset::from_rows(rows).unwrap());
        let all = m.all_indices();
        let a = greedy_cover(&m, &all, 11.0);
        let b = greedy_cover(&m, &all, 14.0);
        assert_eq!((a.size, b.size), (2, 3));
        assert!(a.diameters_hold(&m) && b.diameters_hold(&m));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn covers_are_valid_partitions(
                rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..30),
                r1 in 0.0f64..6.0,
                r2 in 0.0f64..6.0,
            ) {
                let m = FiniteMetric::from_dataset(&Dataset::from_rows(rows).unwrap());
                let all = m.all_indices();
                let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                let a = greedy_cover(&m, &all, lo);
                let b = greedy_cover(&m, &all, hi);
                prop_assert!(a.diameters_hold(&m) && b.diameters_hold(&m));
                let mut seen: Vec<usize> = a.parts.concat();
                seen.sort();
                prop_assert_eq!(&seen, &all);
                let dia = m.diameter(&all);
                prop_assert_eq!(greedy_cover(&m, &all, 2.0 * dia).size, 1);
            }
        }
    }
}
