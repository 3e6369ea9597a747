//! Oracles for Δ_k(X) and the estimator of L_X^{k,ε}.
//!
//! Two exact oracles (contiguous-interval DP in one dimension, subset DP for
//! n <= 12) and one heuristic (D²-seeded Lloyd with restarts). Exact oracles
//! report their value through [`canonical_partition_cost`], so two oracles
//! that find the same optimal partition return bit-identical values.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{self, lower_median, nearest, one_center, raw_cost, CenterSet};
use crate::error::{check_range, Error, Result};
use crate::geometry::{CostKind, Dataset, Point};
use crate::rng;
use crate::sampling;

/// Largest n accepted by [`enumerate_exact`].
pub const ENUMERATE_MAX_N: usize = 12;
/// Lloyd iteration cap per restart.
pub const LLOYD_MAX_ITERS: usize = 200;
/// Largest `k * n` table the 1-D DP will allocate.
const DP_MAX_CELLS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dp1d,
    Enumerate,
    LloydMultistart,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::LloydMultistart)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalCostResult {
    pub value: f64,
    pub centers: CenterSet,
    pub exact: bool,
    pub method: Method,
}

/// Which Δ_m oracle to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Oracle {
    /// Exact 1-D DP when d = 1, else subset enumeration when n <= 12, else Lloyd.
    Auto { restarts: usize, seed: u64 },
    Dp1d,
    Enumerate,
    Lloyd { restarts: usize, seed: u64 },
}

impl Oracle {
    pub fn resolve(self, data: &Dataset) -> Oracle {
        match self {
            Oracle::Auto { restarts, seed } => {
                if data.dim() == 1 {
                    Oracle::Dp1d
                } else if data.len() <= ENUMERATE_MAX_N {
                    Oracle::Enumerate
                } else {
                    Oracle::Lloyd { restarts, seed }
                }
            }
            other => other,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Oracle::Dp1d | Oracle::Enumerate)
    }

    /// Δ_m for m = 1..=kmax.
    pub fn profile(self, data: &Dataset, kmax: usize, kind: CostKind) -> Result<Vec<OptimalCostResult>> {
        match self.resolve(data) {
            Oracle::Dp1d => exact_1d_profile(data, kmax, kind),
            Oracle::Enumerate => enumerate_profile(data, kmax, kind),
            Oracle::Lloyd { restarts, seed } => (1..=kmax)
                .map(|m| lloyd_multistart(data, m, restarts, seed, kind))
                .collect(),
            Oracle::Auto { .. } => unreachable!("resolved above"),
        }
    }

    pub fn solve(self, data: &Dataset, k: usize, kind: CostKind) -> Result<OptimalCostResult> {
        match self.resolve(data) {
            Oracle::Dp1d => exact_1d(data, k, kind),
            Oracle::Enumerate => enumerate_exact(data, k, kind),
            Oracle::Lloyd { restarts, seed } => lloyd_multistart(data, k, restarts, seed, kind),
            Oracle::Auto { .. } => unreachable!("resolved above"),
        }
    }
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle::Auto {
            restarts: 10,
            seed: 0,
        }
    }
}

fn lex_cmp(a: &Point, b: &Point) -> Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinates")
}

/// Optimal one-center cost of a part in exact rational arithmetic (every
/// finite f64 is a dyadic rational): Σ‖x‖² − ‖Σx‖²/n for means, Σ|x − m|
/// around the lower median for 1-D median. `None` where the optimum is not
/// rational (geometric median in d >= 2).
fn exact_part_cost(data: &Dataset, part: &[usize], kind: CostKind) -> Option<BigRational> {
    let n = BigRational::from_integer(BigInt::from(part.len()));
    match kind {
        CostKind::Means => Some(
            (0..data.dim())
                .map(|j| {
                    let xs = part.iter().map(|&i| rational(data.point(i).coords()[j]));
                    let (s, q) = xs.fold(
                        (BigRational::zero(), BigRational::zero()),
                        |(s, q), x| (s + &x, q + &x * &x),
                    );
                    q - &s * &s / &n
                })
                .sum(),
        ),
        CostKind::Median if data.dim() == 1 => {
            let mut xs: Vec<f64> = part.iter().map(|&i| data.point(i).coords()[0]).collect();
            xs.sort_by(f64::total_cmp);
            let m = rational(lower_median(&xs));
            Some(xs.iter().map(|&x| (rational(x) - &m).abs()).sum())
        }
        CostKind::Median => None,
    }
}

/// Cost of a partition evaluated canonically. Where the per-part optimum is
/// rational (means, 1-D median) the total is computed exactly and rounded
/// once, so any two optimal partitions give bit-identical values. Otherwise
/// points inside each part are sorted lexicographically, each part is charged
/// against its single center, and part costs are summed in ascending order.
/// Returns the value and the part centers, ordered by each part's smallest
/// point.
pub fn canonical_partition_cost(
    data: &Dataset,
    parts: &[Vec<usize>],
    kind: CostKind,
) -> (f64, Vec<Point>) {
    let mut charged: Vec<(Point, Point, f64)> = parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|part| {
            let mut refs: Vec<&Point> = part.iter().map(|&i| data.point(i)).collect();
            refs.sort_by(|a, b| lex_cmp(a, b));
            let center = one_center(&refs, kind);
            let c = refs
                .iter()
                .map(|p| kind.from_sq(crate::geometry::sq_dist(p.coords(), center.coords())))
                .sum::<f64>();
            (refs[0].clone(), center, c)
        })
        .collect();
    let exact: Option<BigRational> = parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|part| exact_part_cost(data, part, kind))
        .sum();
    let total = match exact.as_ref().and_then(BigRational::to_f64) {
        Some(v) => v,
        None => {
            let mut costs: Vec<f64> = charged.iter().map(|t| t.2).collect();
            costs.sort_by(f64::total_cmp);
            costs.iter().sum()
        }
    };
    charged.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    (total, charged.into_iter().map(|t| t.1).collect())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::InvalidK { k, n })
    } else {
        Ok(())
    }
}

/// Interval costs over sorted reals, O(1) per query via prefix sums.
struct IntervalCost {
    kind: CostKind,
    sorted: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl IntervalCost {
    fn new(mut values: Vec<f64>, kind: CostKind) -> Self {
        values.sort_by(f64::total_cmp);
        // centering keeps the variance formula well conditioned
        let shift = values.iter().sum::<f64>() / values.len() as f64;
        let mut sum = vec![0.0; values.len() + 1];
        let mut sum_sq = vec![0.0; values.len() + 1];
        for (i, v) in values.iter().enumerate() {
            let c = v - shift;
            sum[i + 1] = sum[i] + c;
            sum_sq[i + 1] = sum_sq[i] + c * c;
        }
        let sorted = values.iter().map(|v| v - shift).collect();
        IntervalCost {
            kind,
            sorted,
            sum,
            sum_sq,
        }
    }

    /// Cost of the sorted slice `[a, b)` against its optimal center.
    fn get(&self, a: usize, b: usize) -> f64 {
        let len = (b - a) as f64;
        match self.kind {
            CostKind::Means => {
                let s = self.sum[b] - self.sum[a];
                (self.sum_sq[b] - self.sum_sq[a] - s * s / len).max(0.0)
            }
            CostKind::Median => {
                let m = a + (b - a - 1) / 2;
                let med = self.sorted[m];
                let below = med * (m - a) as f64 - (self.sum[m] - self.sum[a]);
                let above = (self.sum[b] - self.sum[m + 1]) - med * (b - m - 1) as f64;
                (below + above).max(0.0)
            }
        }
    }
}

/// Fill `cur[i]` for `i in lo..hi` given the previous layer, using the
/// monotonicity of optimal split points (divide and conquer).
#[allow(clippy::too_many_arguments)]
fn dc_layer(
    ic: &IntervalCost,
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [u32],
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo >= hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = (f64::INFINITY, opt_lo);
    for s in opt_lo..=opt_hi.min(mid - 1) {
        let v = prev[s] + ic.get(s, mid);
        if v < best.0 {
            best = (v, s);
        }
    }
    cur[mid] = best.0;
    arg[mid] = best.1 as u32;
    dc_layer(ic, prev, cur, arg, lo, mid, opt_lo, best.1);
    dc_layer(ic, prev, cur, arg, mid + 1, hi, best.1, opt_hi);
}

/// Exact Δ_m for every m = 1..=kmax on one-dimensional data.
///
/// Optimal 1-D clusters are contiguous in sorted order, so Δ_m is a shortest
/// path over split points. Each layer is filled by divide and conquer over the
/// monotone split points, then the optimal partition is re-scored with
/// [`canonical_partition_cost`].
pub fn exact_1d_profile(data: &Dataset, kmax: usize, kind: CostKind) -> Result<Vec<OptimalCostResult>> {
    let values = data.scalars()?;
    let n = values.len();
    check_k(kmax, n)?;
    if kmax.saturating_mul(n + 1) > DP_MAX_CELLS {
        return Err(Error::TooLarge {
            what: "exact_1d table (k * n)",
            n: kmax * (n + 1),
            cap: DP_MAX_CELLS,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let ic = IntervalCost::new(values, kind);

    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(kmax);
    let mut args: Vec<Vec<u32>> = Vec::with_capacity(kmax);
    let first: Vec<f64> = (0..=n)
        .map(|i| if i == 0 { 0.0 } else { ic.get(0, i) })
        .collect();
    layers.push(first);
    args.push(vec![0; n + 1]);
    for j in 2..=kmax {
        let prev = &layers[j - 2];
        let mut cur = vec![f64::INFINITY; n + 1];
        let mut arg = vec![0u32; n + 1];
        dc_layer(&ic, prev, &mut cur, &mut arg, j, n + 1, j - 1, n - 1);
        layers.push(cur);
        args.push(arg);
    }

    let mut out = Vec::with_capacity(kmax);
    for m in 1..=kmax {
        let mut bounds = vec![n];
        let mut end = n;
        for j in (2..=m).rev() {
            end = args[j - 1][end] as usize;
            bounds.push(end);
        }
        bounds.push(0);
        bounds.reverse();
        let parts: Vec<Vec<usize>> = bounds
            .windows(2)
            .map(|w| order[w[0]..w[1]].to_vec())
            .collect();
        let (value, centers) = canonical_partition_cost(data, &parts, kind);
        out.push(OptimalCostResult {
            value,
            centers: CenterSet::new(centers)?,
            exact: true,
            method: Method::Dp1d,
        });
    }
    Ok(out)
}

/// Exact Δ_k for one-dimensional data.
pub fn exact_1d(data: &Dataset, k: usize, kind: CostKind) -> Result<OptimalCostResult> {
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: data.dim(),
        });
    }
    check_k(k, data.len())?;
    Ok(exact_1d_profile(data, k, kind)?.pop().expect("k >= 1"))
}

/// Exact Δ_m for every m = 1..=kmax by dynamic programming over subsets
/// (every partition into at most m parts is considered).
pub fn enumerate_profile(data: &Dataset, kmax: usize, kind: CostKind) -> Result<Vec<OptimalCostResult>> {
    let n = data.len();
    if n > ENUMERATE_MAX_N {
        return Err(Error::TooLarge {
            what: "enumerate_exact",
            n,
            cap: ENUMERATE_MAX_N,
        });
    }
    check_k(kmax, n)?;
    let full = (1usize << n) - 1;
    let members = |mask: usize| -> Vec<usize> { (0..n).filter(|i| mask >> i & 1 == 1).collect() };

    let part_cost: Vec<f64> = (0..=full)
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                0.0
            } else {
                let part = members(mask);
                let refs: Vec<&Point> = part.iter().map(|&i| data.point(i)).collect();
                let c = one_center(&refs, kind);
                refs.iter().map(|p| kind.from_sq(crate::geometry::sq_dist(p.coords(), c.coords()))).sum()
            }
        })
        .collect();

    // best[j][mask]: cheapest split of `mask` into at most j+1 parts;
    // pick[j][mask]: the part holding the lowest set bit, or 0 for "fewer parts"
    let mut best = vec![part_cost.clone()];
    let mut pick = vec![(0..=full).collect::<Vec<usize>>()];
    for j in 1..kmax {
        let prev = &best[j - 1];
        let (b, p): (Vec<f64>, Vec<usize>) = (0..=full)
            .into_par_iter()
            .map(|mask| {
                if mask == 0 {
                    return (0.0, 0);
                }
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                let mut choice = (prev[mask], 0usize);
                // enumerate proper submasks of `rest`, each joined with `low`
                let mut sub = rest;
                loop {
                    let part = sub | low;
                    if part != mask {
                        let v = part_cost[part] + prev[mask ^ part];
                        if v < choice.0 {
                            choice = (v, part);
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
                choice
            })
            .unzip();
        best.push(b);
        pick.push(p);
    }

    let mut out = Vec::with_capacity(kmax);
    for m in 1..=kmax {
        let mut parts = Vec::new();
        let mut mask = full;
        let mut j = m - 1;
        while mask != 0 {
            let p = pick[j][mask];
            if j == 0 {
                parts.push(members(mask));
                break;
            }
            if p == 0 {
                j -= 1;
                continue;
            }
            parts.push(members(p));
            mask ^= p;
            j -= 1;
        }
        let (value, centers) = canonical_partition_cost(data, &parts, kind);
        out.push(OptimalCostResult {
            value,
            centers: CenterSet::new(centers)?,
            exact: true,
            method: Method::Enumerate,
        });
    }
    Ok(out)
}

/// Exact Δ_k for tiny datasets (n <= 12) of any dimension. For the median
/// cost in d > 1 the part centers are geometric medians, so the value is
/// exact up to the Weiszfeld tolerance.
pub fn enumerate_exact(data: &Dataset, k: usize, kind: CostKind) -> Result<OptimalCostResult> {
    check_k(k, data.len())?;
    Ok(enumerate_profile(data, k, kind)?.pop().expect("k >= 1"))
}

/// One Lloyd run from a D² seed. Returns (cost, centers).
fn lloyd_run(data: &Dataset, k: usize, kind: CostKind, rng: &mut rng::Rng) -> (f64, Vec<Point>) {
    let trace = sampling::d2_sample_with(data, k, kind, None, rng);
    let mut centers: Vec<Point> = trace.chosen.iter().map(|&i| data.point(i).clone()).collect();
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..LLOYD_MAX_ITERS {
        let mut next = Vec::with_capacity(data.len());
        let mut contrib = Vec::with_capacity(data.len());
        for x in data {
            let (i, sq) = nearest(x.coords(), &centers);
            next.push(i);
            contrib.push(sq);
        }
        if next == assignment {
            break;
        }
        assignment = next;

        let mut cells: Vec<Vec<&Point>> = vec![Vec::new(); centers.len()];
        for (x, &c) in data.iter().zip(&assignment) {
            cells[c].push(x);
        }
        let mut taken = vec![false; data.len()];
        for (c, cell) in cells.iter().enumerate() {
            if !cell.is_empty() {
                centers[c] = one_center(cell, kind);
                continue;
            }
            // reseed an empty cluster at the point that currently costs most
            let far = (0..data.len())
                .filter(|&i| !taken[i])
                .fold(None::<usize>, |acc, i| match acc {
                    Some(a) if contrib[a] >= contrib[i] => Some(a),
                    _ => Some(i),
                });
            if let Some(i) = far {
                taken[i] = true;
                contrib[i] = 0.0;
                centers[c] = data.point(i).clone();
            }
        }
    }
    (raw_cost(&centers, data.points(), kind), centers)
}

/// Best of `restarts` D²-seeded Lloyd runs. Restart `i` uses stream `i` of
/// `seed`; ties keep the lowest restart index, so the result does not depend on
/// how restarts are scheduled.
pub fn lloyd_multistart(
    data: &Dataset,
    k: usize,
    restarts: usize,
    seed: u64,
    kind: CostKind,
) -> Result<OptimalCostResult> {
    if restarts == 0 {
        return Err(Error::OutOfRange {
            name: "restarts",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    check_k(k, data.len())?;
    let runs: Vec<(f64, Vec<Point>)> = (0..restarts)
        .into_par_iter()
        .map(|i| lloyd_run(data, k, kind, &mut rng::stream(seed, i as u64)))
        .collect();
    let (value, centers) = runs
        .into_iter()
        .reduce(|best, r| if r.0 < best.0 { r } else { best })
        .expect("restarts >= 1");
    Ok(OptimalCostResult {
        value,
        centers: CenterSet::new(centers)?,
        exact: false,
        method: Method::LloydMultistart,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LEstimate {
    pub k: usize,
    pub epsilon: f64,
    pub l_hat: usize,
    pub exact: bool,
    pub delta_k_used: f64,
    pub oracle: Oracle,
}

/// Least m with Δ_m(X) <= ε·Δ_k(X), found by binary search over m (Δ_m is
/// non-increasing). The search range stops at the number of distinct points,
/// where Δ_m = 0.
pub fn estimate_l(
    data: &Dataset,
    k: usize,
    epsilon: f64,
    kind: CostKind,
    oracle: Oracle,
) -> Result<LEstimate> {
    check_range("epsilon", epsilon, "(0, 1]", epsilon > 0.0 && epsilon <= 1.0)?;
    check_k(k, data.len())?;
    let oracle = oracle.resolve(data);
    let delta_k = oracle.solve(data, k, kind)?.value;
    let target = epsilon * delta_k;
    let hi_bound = data.distinct_count().min(data.len());

    let fits = |m: usize| -> Result<bool> {
        let v = if m == k {
            delta_k
        } else {
            oracle.solve(data, m, kind)?.value
        };
        Ok(crate::leq_rel(v, target))
    };
    let (mut lo, mut hi) = (1usize, hi_bound.max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(LEstimate {
        k,
        epsilon,
        l_hat: lo,
        exact: oracle.is_exact(),
        delta_k_used: delta_k,
        oracle,
    })
}

/// Convenience: Δ_k through the given oracle.
pub fn delta_k(data: &Dataset, k: usize, kind: CostKind, oracle: Oracle) -> Result<f64> {
    Ok(oracle.solve(data, k, kind)?.value)
}

/// Cost of the returned centers on the data, recomputed from scratch.
pub fn recheck(result: &OptimalCostResult, data: &Dataset, kind: CostKind) -> Result<f64> {
    cost::cost(&result.centers, data, kind)
}
