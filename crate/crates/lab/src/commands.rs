//! One function per subcommand; each writes its artifacts and returns the
//! report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::json;

use kcost_core::constructions::{build_1d_upper, build_fan_coreset, build_metric_annuli, cells_from_centers, NetSource};
use kcost_core::coreset::{build_d2_coreset, check_geometric, validate_coreset, weigh};
use kcost_core::cost::{one_center, CenterSet};
use kcost_core::generators::{certify_lower_bound, gen_lower_1d, gen_lower_ddim, gen_random, LowerBoundInstance, RandomSpec};
use kcost_core::geometry::{CostKind, Dataset, FiniteMetric, Point};
use kcost_core::metricspace::{covering_number_check, estimate_doubling, gamma_estimate};
use kcost_core::nets::{build_net, certify};
use kcost_core::sampling::{d2_sample, d2_sample_from, overseed_experiment};
use kcost_core::solvers::{estimate_l, lloyd_multistart, recheck};
use kcost_core::{io, leq_rel, REL_TOL};

use crate::cli::*;
use crate::report::{write_points, write_table, write_weighted, Report};

/// Report name for each command: `<name>.json`.
pub fn report_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gen(_) => "gen",
        Command::Solve(_) => "solve",
        Command::Seed(_) => "seed",
        Command::Construct(_) => "construct",
        Command::Coreset(_) => "coreset",
        Command::Nets(_) => "nets",
        Command::Metric(_) => "metric",
        Command::EstimateL(_) => "estimate-l",
        Command::DecayCurve(_) => "decay-curve",
    }
}

pub fn run(cli: &Cli) -> Result<Report> {
    let kind: CostKind = cli.kind.into();
    let out = cli.out.as_path();
    let seed = cli.seed;
    let (results, pass, artifacts) = match &cli.command {
        Command::Gen(a) => gen(&a.family, kind, seed, out)?,
        Command::Solve(a) => solve(a, kind, seed, out)?,
        Command::Seed(a) => seed_cmd(a, kind, seed, out)?,
        Command::Construct(a) => construct(&a.which, kind, seed, out)?,
        Command::Coreset(a) => coreset(a, kind, seed, out)?,
        Command::Nets(a) => nets(a, seed, out)?,
        Command::Metric(a) => metric(a, seed)?,
        Command::EstimateL(a) => {
            let data = load(&a.input, seed)?;
            let est = estimate_l(&data, a.k, a.epsilon, kind, a.oracle.oracle(seed))?;
            (serde_json::to_value(est)?, None, vec![])
        }
        Command::DecayCurve(a) => decay(a, kind, seed, out)?,
    };
    Report::new(cli, results, pass, artifacts)
}

type Outcome = (serde_json::Value, Option<bool>, Vec<PathBuf>);

fn parse_spec(spec: &str) -> Result<RandomSpec> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        fs::read_to_string(spec).with_context(|| format!("reading spec {spec}"))?
    };
    serde_json::from_str(&text).context("parsing generator spec")
}

pub fn load(input: &DataArgs, seed: u64) -> Result<Dataset> {
    match (&input.data, &input.spec) {
        (Some(path), None) => io::load_dataset(path).with_context(|| format!("reading dataset {}", path.display())),
        (None, Some(spec)) => Ok(gen_random(&parse_spec(spec)?, seed)?.data),
        _ => bail!("give exactly one of --data and --spec"),
    }
}

fn lower_outcome(inst: &LowerBoundInstance, swap_rounds: usize, out: &Path) -> Result<Outcome> {
    let cert = certify_lower_bound(inst, swap_rounds)?;
    let cost_ok = (cert.apex_cost_evaluated - inst.spec.apex_cost).abs() <= REL_TOL * inst.spec.apex_cost;
    let pass = cert.balls_disjoint && cert.voronoi_ok && cost_ok && cert.adversary_beaten != Some(false);
    let mut artifacts = vec![write_weighted(out, "sites.csv", &inst.sites)?];
    if let Some(data) = &inst.data {
        artifacts.push(write_points(out, "data.csv", data.dim(), data.points())?);
    }
    let results = json!({ "spec": inst.spec, "certificate": cert, "apex_cost_matches": cost_ok });
    Ok((results, Some(pass), artifacts))
}

fn gen(family: &GenFamily, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    match family {
        GenFamily::Random { spec } => {
            let spec = parse_spec(spec)?;
            let inst = gen_random(&spec, seed)?;
            let path = write_points(out, "data.csv", inst.data.dim(), inst.data.points())?;
            let results = json!({ "spec": spec, "n": inst.data.len(), "d": inst.data.dim(), "centers": inst.centers });
            Ok((results, None, vec![path]))
        }
        GenFamily::Lower1d { epsilon, t } => lower_outcome(&gen_lower_1d(*epsilon, *t, kind)?, 2, out),
        GenFamily::LowerDdim { epsilon, k, d, t, pool, swap_rounds } => {
            let inst = gen_lower_ddim(*epsilon, *k, *d, *t, kind, None, *pool, seed)?;
            lower_outcome(&inst, *swap_rounds, out)
        }
    }
}

fn solve(a: &SolveArgs, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    let data = load(&a.input, seed)?;
    let res = a.oracle.oracle(seed).solve(&data, a.k, kind)?;
    let recomputed = recheck(&res, &data, kind)?;
    let path = write_points(out, "centers.csv", data.dim(), res.centers.centers())?;
    let results = json!({
        "n": data.len(),
        "k": a.k,
        "value": res.value,
        "recomputed": recomputed,
        "exact": res.exact,
        "method": res.method,
    });
    Ok((results, None, vec![path]))
}

fn seed_cmd(a: &SeedArgs, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    let data = load(&a.input, seed)?;
    match (a.m, a.k, a.epsilon) {
        (Some(m), None, None) => {
            let trace = match a.first {
                Some(first) => d2_sample_from(&data, m, kind, first, seed)?,
                None => d2_sample(&data, m, kind, seed)?,
            };
            let rows = trace
                .chosen
                .iter()
                .zip(&trace.cost_after)
                .enumerate()
                .map(|(i, (idx, c))| vec![(i + 1).to_string(), idx.to_string(), c.to_string()]);
            let path = write_table(out, "trace.csv", "m,index,cost", rows)?;
            Ok((serde_json::to_value(trace)?, None, vec![path]))
        }
        (None, Some(k), Some(eps)) => {
            let rep = overseed_experiment(&data, k, eps, a.c_const, a.trials, seed, kind, a.oracle.oracle(seed))?;
            let rows = rep
                .mean_decay
                .iter()
                .enumerate()
                .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()]);
            let path = write_table(out, "mean_decay.csv", "m,mean_cost", rows)?;
            let pass = a.min_rate.map(|r| rep.success_rate >= r);
            Ok((serde_json::to_value(rep)?, pass, vec![path]))
        }
        _ => bail!("seed needs either --m, or --k with --epsilon"),
    }
}

fn construct(which: &Construction, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    match which {
        Construction::Upper1d { input, epsilon, center } => {
            let data = load(input, seed)?;
            ensure!(data.dim() == 1, "upper1d needs 1-D data, got d = {}", data.dim());
            let c = match center {
                Some(c) => *c,
                None => one_center(&data.points().iter().collect::<Vec<_>>(), kind).coords()[0],
            };
            let xs: Vec<f64> = data.scalars()?.iter().map(|x| x - c).collect();
            let grid = build_1d_upper(&xs, *epsilon, kind)?;
            let points: Vec<Point> = grid.points.iter().map(|p| Point::scalar(p + c)).collect::<kcost_core::Result<_>>()?;
            let path = write_points(out, "grid.csv", 1, &points)?;
            let results = json!({
                "center": c,
                "size": grid.points.len(),
                "size_bound": grid.size_bound(),
                "grid": grid,
            });
            Ok((results, Some(grid.holds()), vec![path]))
        }
        Construction::Fan { input, k, epsilon, pool, restarts } => {
            let data = load(input, seed)?;
            let lloyd = lloyd_multistart(&data, *k, *restarts, seed, kind)?;
            let cells = cells_from_centers(&lloyd.centers, &data);
            let fan = build_fan_coreset(&data, &cells, *epsilon, kind, &NetSource::Build { pool: *pool, seed })?;
            let path = write_points(out, "fan.csv", data.dim(), &fan.points)?;
            let pass = fan.holds() && fan.snapping_holds();
            let results = json!({ "size": fan.points.len(), "ratio": fan.ratio(), "fan": fan });
            Ok((results, Some(pass), vec![path]))
        }
        Construction::Annuli { matrix, center, epsilon } => {
            let m = io::load_matrix(matrix).with_context(|| format!("reading matrix {}", matrix.display()))?;
            m.check_index(*center)?;
            let cover = build_metric_annuli(&m, &m.all_indices(), *center, *epsilon)?;
            let rows = cover.representatives.iter().map(|i| vec![i.to_string()]);
            let path = write_table(out, "representatives.csv", "index", rows)?;
            let pass = cover.holds() && cover.annuli_hold();
            Ok((serde_json::to_value(cover)?, Some(pass), vec![path]))
        }
    }
}

#[derive(Serialize)]
struct CoresetBuild {
    method: CoresetMethod,
    /// Fan: the geometric guarantee against the Lloyd clustering.
    fan_ratio: Option<f64>,
    fan_holds: Option<bool>,
    /// D²: the sample size and Φ(S, X) / Δ_k.
    sample_size: Option<usize>,
    geometric_ratio: Option<f64>,
    geometric_exact: Option<bool>,
}

fn coreset(a: &CoresetArgs, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    let data = load(&a.input, seed)?;
    let (weighted, build) = match a.method {
        CoresetMethod::Fan => {
            let lloyd = lloyd_multistart(&data, a.k, a.oracle.restarts.max(1), seed, kind)?;
            let cells = cells_from_centers(&lloyd.centers, &data);
            let inner = a.epsilon * a.epsilon / 32.0;
            let fan = build_fan_coreset(&data, &cells, inner, kind, &NetSource::Build { pool: Some(a.pool), seed })?;
            let build = CoresetBuild {
                method: a.method,
                fan_ratio: Some(fan.ratio()),
                fan_holds: Some(fan.holds()),
                sample_size: None,
                geometric_ratio: None,
                geometric_exact: None,
            };
            (weigh(&fan.center_set()?, &data)?, build)
        }
        CoresetMethod::D2 => {
            let oracle = a.oracle.oracle(seed);
            let c = build_d2_coreset(&data, a.k, a.epsilon, a.beta, seed, kind, oracle)?;
            let target = (a.epsilon * a.epsilon / a.beta).min(1.0);
            let centers = CenterSet::new(c.coreset.points().to_vec())?;
            let g = check_geometric(&centers, &data, a.k, target, kind, oracle)?;
            let build = CoresetBuild {
                method: a.method,
                fan_ratio: None,
                fan_holds: None,
                sample_size: Some(c.m),
                geometric_ratio: Some(g.ratio),
                geometric_exact: Some(g.exact),
            };
            (c.coreset, build)
        }
    };
    let mut cert = validate_coreset(&data, &weighted, a.k, a.epsilon, a.trials, seed, kind)?;
    if a.method == CoresetMethod::D2 {
        cert.beta = Some(a.beta);
    }
    let path = write_weighted(out, "coreset.csv", &weighted)?;
    let pass = cert.pass;
    let results = json!({ "n": data.len(), "build": build, "certificate": cert });
    Ok((results, Some(pass), vec![path]))
}

fn nets(a: &NetsArgs, seed: u64, out: &Path) -> Result<Outcome> {
    let net = build_net(a.d, a.epsilon, a.pool, seed)?;
    let cert = certify(&net, a.probes, seed.wrapping_add(1));
    let path = write_points(out, "net.csv", a.d, &net.points)?;
    let pass = cert.pass;
    Ok((serde_json::to_value(cert)?, Some(pass), vec![path]))
}

fn metric(a: &MetricArgs, seed: u64) -> Result<Outcome> {
    let m = match (&a.matrix, &a.data) {
        (Some(p), None) => io::load_matrix(p).with_context(|| format!("reading matrix {}", p.display()))?,
        (None, Some(p)) => FiniteMetric::from_dataset(&io::load_dataset(p).with_context(|| format!("reading dataset {}", p.display()))?),
        _ => bail!("give exactly one of --matrix and --data"),
    };
    let doubling = estimate_doubling(&m, a.balls, seed);
    let gamma = gamma_estimate(&m, a.epsilon, a.balls, seed)?;
    let soft = covering_number_check(gamma.gamma_hat, a.epsilon, doubling.d_hat, a.slack);
    if !soft.holds {
        eprintln!(
            "warning: covering estimate {} exceeds (4/ε)^(d+slack) = {}",
            gamma.gamma_hat, soft.bound
        );
    }
    let results = json!({ "n": m.size(), "doubling": doubling, "gamma": gamma, "covering_check": soft });
    Ok((results, None, vec![]))
}

#[derive(Serialize)]
struct CurvePoint {
    m: usize,
    cost: f64,
    exact: bool,
}

fn decay(a: &DecayArgs, kind: CostKind, seed: u64, out: &Path) -> Result<Outcome> {
    let data = load(&a.input, seed)?;
    ensure!(a.mmax >= 1 && a.mmax <= data.len(), "--mmax must be in 1..={}", data.len());
    let (raw, exact): (Vec<f64>, bool) = match a.mode {
        DecayMode::Exact => {
            let oracle = a.oracle.oracle(seed);
            let prof = oracle.profile(&data, a.mmax, kind)?;
            (prof.iter().map(|r| r.value).collect(), oracle.resolve(&data).is_exact())
        }
        DecayMode::Seeding => {
            ensure!(a.trials >= 1, "--trials must be at least 1");
            let mut best = vec![f64::INFINITY; a.mmax];
            for t in 0..a.trials {
                let tr = d2_sample(&data, a.mmax, kind, seed.wrapping_add(t as u64))?;
                let last = tr.final_cost();
                for (m, b) in best.iter_mut().enumerate() {
                    *b = b.min(tr.cost_after.get(m).copied().unwrap_or(last));
                }
            }
            (best, false)
        }
    };
    // Δ_m never exceeds any cost found with fewer centers
    let mut curve = Vec::with_capacity(raw.len());
    let mut running = f64::INFINITY;
    for (i, v) in raw.into_iter().enumerate() {
        running = running.min(v);
        curve.push(CurvePoint { m: i + 1, cost: running, exact });
    }
    debug_assert!(curve.windows(2).all(|w| leq_rel(w[1].cost, w[0].cost)));
    let rows = curve.iter().map(|p| vec![p.m.to_string(), p.cost.to_string(), p.exact.to_string()]);
    let path = write_table(out, "curve.csv", "m,cost,exact", rows)?;
    Ok((json!({ "mode": a.mode, "curve": curve }), None, vec![path]))
}
