//! Fluctuation fields, covariance estimation and the ε × t convergence run.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::dynamics::{collision_graph, upsilon_step, ConditioningParams, Flow};
use crate::ensemble::{sample_replica, Configuration, EnsembleParams};
use crate::linearized::{semigroup_mc, SemigroupEstimate, SemigroupParams};
use crate::par::map_indexed;
use crate::rng::substream;
use crate::stats::{jackknife_product_mean, mean_stderr};
use crate::test_function::TestFunction;
use crate::{Error, Result};

/// Replica indices at and above this offset form the centering batch.
pub const CENTERING_OFFSET: u64 = 1 << 40;
/// Largest tolerated fraction of aborted replicas.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

/// `μ^{1/2} (μ^{-1} Σᵢ g(zᵢ) − center)`.
pub fn fluctuation_field(config: &Configuration, g: &TestFunction, center: f64, mu: f64) -> f64 {
    mu.sqrt() * (config.sum(|p| g.eval(config.dim, p)) / mu - center)
}

/// Ensemble mean of `μ^{-1} Σᵢ g(zᵢ)` at time zero over the centering batch.
pub fn centering_constant(
    g: &TestFunction,
    params: &EnsembleParams,
    replicas: usize,
) -> Result<(f64, f64)> {
    let vals = map_indexed(replicas, |i| {
        sample_replica(params, CENTERING_OFFSET + i as u64)
            .map(|c| c.sum(|p| g.eval(c.dim, p)) / params.mu)
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(mean_stderr(&vals))
}

/// What one replica contributes to a grid row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaRecord {
    /// `Σ g` at time zero.
    pub g_sum: f64,
    /// `Σ h` at each requested time.
    pub h_sums: Vec<f64>,
    pub upsilon_holds: Option<bool>,
    /// Collisions in the recollision window.
    pub collisions: usize,
    /// Cycle-closing collisions in the same window.
    pub recollisions: usize,
}

/// Runs one replica through the requested times (any order), optionally
/// evaluating Υ on the δ-grid of `[0, max t]`. Recollisions are counted on
/// `[0, δ]` when conditioning is given and on `[0, max t]` otherwise.
pub fn replica_record(
    config: &Configuration,
    h: &TestFunction,
    g: &TestFunction,
    times: &[f64],
    cond: Option<&ConditioningParams>,
) -> Result<ReplicaRecord> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let mut stops: Vec<(f64, Option<usize>)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, Some(i)))
        .collect();
    if let Some(c) = cond {
        let mut k = 0usize;
        while (k as f64) * c.delta <= horizon + 1e-12 {
            stops.push((k as f64 * c.delta, None));
            k += 1;
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut flow = Flow::new(config)?;
    let g_sum = config.sum(|p| g.eval(config.dim, p));
    let mut h_sums = vec![0.0; times.len()];
    let mut upsilon = cond.map(|_| true);
    for (t, slot) in stops {
        flow.advance_to(t)?;
        let snap = flow.snapshot();
        match slot {
            Some(i) => h_sums[i] = snap.sum(|p| h.eval(snap.dim, p)),
            None => {
                let c = cond.expect("diagnostic stop without conditioning");
                if !upsilon_step(&snap, t, c).holds {
                    upsilon = Some(false);
                }
            }
        }
    }
    flow.advance_to(horizon)?;
    let log = flow.log();
    let window = cond.map_or(horizon, |c| c.delta.min(horizon));
    let graph = collision_graph(log, config.len(), 0.0, window);
    Ok(ReplicaRecord {
        g_sum,
        h_sums,
        upsilon_holds: upsilon,
        collisions: graph.edges.len(),
        recollisions: graph.cycle_edge_count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub failed: usize,
}

fn abort_check(failed: usize, total: usize, first: Option<&Error>) -> Result<()> {
    if failed as f64 > MAX_ABORT_FRACTION * total as f64 {
        return Err(Error::TooManyAborts {
            failed,
            total,
            first: first.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(())
}

/// `E[ζ^t(h) ζ⁰(g)]` over `replicas` replicas, centered with a disjoint
/// batch of `centering_replicas`.
pub fn covariance_estimate(
    h: &TestFunction,
    g: &TestFunction,
    t: f64,
    params: &EnsembleParams,
    replicas: usize,
    centering_replicas: usize,
) -> Result<CovarianceEstimate> {
    if replicas < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 replicas, got {replicas}"
        )));
    }
    let (ch, _) = centering_constant(h, params, centering_replicas)?;
    let (cg, _) = centering_constant(g, params, centering_replicas)?;
    let out = map_indexed(replicas, |i| {
        sample_replica(params, i as u64).and_then(|c| replica_record(&c, h, g, &[t], None))
    });
    let (records, failed, first) = split_records(out);
    abort_check(failed, replicas, first.as_ref())?;
    let (a, b) = zeta_pairs(&records, params.mu, ch, cg, 0);
    let (mean, stderr) = jackknife_product_mean(&a, &b);
    Ok(CovarianceEstimate {
        mean,
        stderr,
        replicas: records.len(),
        failed,
    })
}

fn split_records(out: Vec<Result<ReplicaRecord>>) -> (Vec<ReplicaRecord>, usize, Option<Error>) {
    let mut records = Vec::with_capacity(out.len());
    let mut failed = 0;
    let mut first = None;
    for r in out {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failed += 1;
                first.get_or_insert(e);
            }
        }
    }
    (records, failed, first)
}

fn zeta_pairs(
    records: &[ReplicaRecord],
    mu: f64,
    ch: f64,
    cg: f64,
    ti: usize,
) -> (Vec<f64>, Vec<f64>) {
    let s = mu.sqrt();
    let zt = records
        .iter()
        .map(|r| s * (r.h_sums[ti] / mu - ch))
        .collect();
    let z0 = records.iter().map(|r| s * (r.g_sum / mu - cg)).collect();
    (zt, z0)
}

/// NaN is written as `null` in JSON; read it back as NaN.
fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One `(ε, t)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(deserialize_with = "nullable")]
    pub epsilon: f64,
    #[serde(deserialize_with = "nullable")]
    pub t: f64,
    #[serde(deserialize_with = "nullable")]
    pub cov: f64,
    #[serde(deserialize_with = "nullable")]
    pub cov_stderr: f64,
    pub replicas: usize,
    pub failed: usize,
    #[serde(deserialize_with = "nullable")]
    pub semigroup: f64,
    #[serde(deserialize_with = "nullable")]
    pub sg_stderr: f64,
    #[serde(deserialize_with = "nullable")]
    pub discrepancy: f64,
    #[serde(deserialize_with = "nullable")]
    pub upsilon_fail_rate: f64,
    #[serde(deserialize_with = "nullable")]
    pub upsilon_stderr: f64,
    #[serde(deserialize_with = "nullable")]
    pub recollision_rate: f64,
    #[serde(deserialize_with = "nullable")]
    pub recollision_stderr: f64,
}

impl ReportRow {
    pub fn discrepancy_stderr(&self) -> f64 {
        self.cov_stderr.hypot(self.sg_stderr)
    }
}

/// Monotonicity of a quantity along the ε grid, largest ε first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub quantity: String,
    pub t: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub label: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub semigroup: Vec<SemigroupEstimate>,
    pub monotone: Vec<MonotoneCheck>,
    pub failures: Vec<String>,
    pub seeds: Vec<SeedRecord>,
}

impl CovarianceReport {
    /// All monotonicity claims hold (vacuous for a single ε).
    pub fn monotone_ok(&self) -> bool {
        self.monotone.iter().all(|m| m.holds)
    }
}

/// `values[k+1] ≤ values[k] + √(se_k² + se_{k+1}²)` for `(value, se)` pairs
/// ordered by decreasing ε. NaN entries fail.
pub fn non_increasing(values: &[(f64, f64)]) -> bool {
    values
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + w[0].1.hypot(w[1].1))
}

fn derive_seed(seed: u64, index: u64, salt: u64) -> u64 {
    substream(seed, index, salt).next_u64()
}

/// Seed of the ensemble at the `k`-th ε of the grid.
pub fn ensemble_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, k as u64, 1)
}

/// Seed of the semigroup estimate at the `k`-th t of the grid.
pub fn semigroup_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, k as u64, 2)
}

/// Fills the ε × t grid: particle covariances, semigroup values, diagnostics
/// and monotonicity flags. Failed grid points are recorded and skipped.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<CovarianceReport> {
    cfg.validate()?;
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    let mut semigroup = Vec::with_capacity(cfg.times.len());
    for (k, &t) in cfg.times.iter().enumerate() {
        let seed = semigroup_seed(cfg.seed, k);
        seeds.push(SeedRecord {
            label: format!("semigroup t={t}"),
            seed,
        });
        let p = SemigroupParams {
            n_max: cfg.n_max,
            mode: cfg.branch_mode,
            ..SemigroupParams::new(cfg.dim, t, cfg.semigroup_samples, seed)
        };
        semigroup.push(semigroup_mc(&cfg.h, &cfg.g, &p)?);
    }
    let mut rows = Vec::new();
    for (k, &eps) in cfg.epsilons.iter().enumerate() {
        let seed = ensemble_seed(cfg.seed, k);
        seeds.push(SeedRecord {
            label: format!("ensemble epsilon={eps}"),
            seed,
        });
        let mut params = EnsembleParams::boltzmann_grad(cfg.dim, eps, seed, cfg.replicas)?;
        params.sampler = cfg.sampler;
        let cond = cfg.conditioning.resolve(eps, cfg.dim);
        match grid_point(cfg, &params, &cond, &semigroup) {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => {
                failures.push(format!("epsilon={eps}: {e}"));
                for (sg, &t) in semigroup.iter().zip(&cfg.times) {
                    rows.push(ReportRow {
                        epsilon: eps,
                        t,
                        cov: f64::NAN,
                        cov_stderr: f64::NAN,
                        replicas: 0,
                        failed: cfg.replicas,
                        semigroup: sg.value,
                        sg_stderr: sg.stderr,
                        discrepancy: f64::NAN,
                        upsilon_fail_rate: f64::NAN,
                        upsilon_stderr: f64::NAN,
                        recollision_rate: f64::NAN,
                        recollision_stderr: f64::NAN,
                    });
                }
            }
        }
    }
    let monotone = monotone_checks(cfg, &rows);
    Ok(CovarianceReport {
        config: cfg.clone(),
        rows,
        semigroup,
        monotone,
        failures,
        seeds,
    })
}

/// `Σ recollisions / Σ collisions` with the usual ratio-estimator error.
fn pooled_ratio(records: &[ReplicaRecord]) -> (f64, f64) {
    let total: f64 = records.iter().map(|r| r.collisions as f64).sum();
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let r = records.iter().map(|r| r.recollisions as f64).sum::<f64>() / total;
    let ss: f64 = records
        .iter()
        .map(|x| (x.recollisions as f64 - r * x.collisions as f64).powi(2))
        .sum();
    (r, ss.sqrt() / total)
}

/// `(P(Υ fails), se, recollision ratio, se)`.
fn diagnostic_rates(records: &[ReplicaRecord]) -> (f64, f64, f64, f64) {
    let n = records.len() as f64;
    let fails = records
        .iter()
        .filter(|r| r.upsilon_holds == Some(false))
        .count() as f64;
    let p = fails / n;
    let (rm, rs) = pooled_ratio(records);
    (p, (p * (1.0 - p) / n).sqrt(), rm, rs)
}

/// Conditioning diagnostics at one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub epsilon: f64,
    pub replicas: usize,
    pub failed: usize,
    pub upsilon_fail_rate: f64,
    pub upsilon_stderr: f64,
    pub recollision_rate: f64,
    pub recollision_stderr: f64,
    /// Mean number of collisions in the recollision window.
    pub mean_collisions: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
    pub monotone: Vec<MonotoneCheck>,
}

/// Υ and recollision diagnostics along the ε grid of `cfg`, on
/// `[0, max t]`, without covariances or semigroup estimates.
pub fn diagnostics_scan(cfg: &ExperimentConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let horizon = cfg.times.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for (k, &eps) in cfg.epsilons.iter().enumerate() {
        let mut params =
            EnsembleParams::boltzmann_grad(cfg.dim, eps, ensemble_seed(cfg.seed, k), cfg.replicas)?;
        params.sampler = cfg.sampler;
        let cond = cfg.conditioning.resolve(eps, cfg.dim);
        let out = map_indexed(cfg.replicas, |i| {
            sample_replica(&params, i as u64)
                .and_then(|c| replica_record(&c, &cfg.h, &cfg.g, &[horizon], Some(&cond)))
        });
        let (records, failed, first) = split_records(out);
        abort_check(failed, cfg.replicas, first.as_ref())?;
        let (ups, ups_se, rec, rec_se) = diagnostic_rates(&records);
        let mean_collisions =
            records.iter().map(|r| r.collisions as f64).sum::<f64>() / records.len() as f64;
        rows.push(DiagnosticsRow {
            epsilon: eps,
            replicas: records.len(),
            failed,
            upsilon_fail_rate: ups,
            upsilon_stderr: ups_se,
            recollision_rate: rec,
            recollision_stderr: rec_se,
            mean_collisions,
        });
    }
    let mut monotone = Vec::new();
    if rows.len() >= 2 {
        let mut ordered: Vec<&DiagnosticsRow> = rows.iter().collect();
        ordered.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        let ups: Vec<(f64, f64)> = ordered
            .iter()
            .map(|r| (r.upsilon_fail_rate, r.upsilon_stderr))
            .collect();
        let rec: Vec<(f64, f64)> = ordered
            .iter()
            .map(|r| (r.recollision_rate, r.recollision_stderr))
            .collect();
        monotone.push(MonotoneCheck {
            quantity: "upsilon_fail_rate".into(),
            t: None,
            holds: non_increasing(&ups),
        });
        monotone.push(MonotoneCheck {
            quantity: "recollision_rate".into(),
            t: None,
            holds: non_increasing(&rec),
        });
    }
    Ok(DiagnosticsReport { rows, monotone })
}

fn grid_point(
    cfg: &ExperimentConfig,
    params: &EnsembleParams,
    cond: &ConditioningParams,
    semigroup: &[SemigroupEstimate],
) -> Result<Vec<ReportRow>> {
    let (ch, _) = centering_constant(&cfg.h, params, cfg.centering_replicas)?;
    let (cg, _) = centering_constant(&cfg.g, params, cfg.centering_replicas)?;
    let diag = cfg.diagnostics.then_some(cond);
    let out = map_indexed(cfg.replicas, |i| {
        sample_replica(params, i as u64)
            .and_then(|c| replica_record(&c, &cfg.h, &cfg.g, &cfg.times, diag))
    });
    let (records, failed, first) = split_records(out);
    abort_check(failed, cfg.replicas, first.as_ref())?;

    let (ups, ups_se, rec, rec_se) = if cfg.diagnostics {
        diagnostic_rates(&records)
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };

    Ok(cfg
        .times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let (a, b) = zeta_pairs(&records, params.mu, ch, cg, ti);
            let (cov, cov_stderr) = jackknife_product_mean(&a, &b);
            let sg = &semigroup[ti];
            ReportRow {
                epsilon: params.epsilon,
                t,
                cov,
                cov_stderr,
                replicas: records.len(),
                failed,
                semigroup: sg.value,
                sg_stderr: sg.stderr,
                discrepancy: (cov - sg.value).abs(),
                upsilon_fail_rate: ups,
                upsilon_stderr: ups_se,
                recollision_rate: rec,
                recollision_stderr: rec_se,
            }
        })
        .collect())
}

fn monotone_checks(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Vec<MonotoneCheck> {
    if cfg.epsilons.len() < 2 {
        return Vec::new();
    }
    let mut eps = cfg.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let series = |t: f64, f: &dyn Fn(&ReportRow) -> (f64, f64)| -> Vec<(f64, f64)> {
        eps.iter()
            .filter_map(|e| rows.iter().find(|r| r.epsilon == *e && r.t == t).map(f))
            .collect()
    };
    let mut out: Vec<MonotoneCheck> = cfg
        .times
        .iter()
        .map(|&t| MonotoneCheck {
            quantity: "discrepancy".into(),
            t: Some(t),
            holds: non_increasing(&series(t, &|r| (r.discrepancy, r.discrepancy_stderr()))),
        })
        .collect();
    if cfg.diagnostics {
        let t0 = cfg.times[0];
        out.push(MonotoneCheck {
            quantity: "upsilon_fail_rate".into(),
            t: None,
            holds: non_increasing(&series(t0, &|r| (r.upsilon_fail_rate, r.upsilon_stderr))),
        });
        out.push(MonotoneCheck {
            quantity: "recollision_rate".into(),
            t: None,
            holds: non_increasing(&series(t0, &|r| (r.recollision_rate, r.recollision_stderr))),
        });
    }
    out
}
