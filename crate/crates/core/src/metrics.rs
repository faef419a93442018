//! Monte-Carlo runs and summary statistics.
//!
//! Run `k` of a scenario draws one realized route from a seed derived from
//! `(seed, k)` and evaluates every policy on that same realization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::{run_trip, RunOutcome};
use crate::error::{Error, Result};
use crate::model::{EnergyModel, RateFactors, RouteProfile, TrafficClass, TransferTask};
use crate::prediction::{realize_route, ErrorSpec};
use crate::schedulers::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "offload_pct")]
    OffloadPct,
    #[serde(rename = "transfer_delay_s")]
    TransferDelay,
    #[serde(rename = "energy_j")]
    Energy,
    #[serde(rename = "mobile_mb")]
    MobileMb,
    #[serde(rename = "cache_mb")]
    CacheMb,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::OffloadPct,
        Metric::TransferDelay,
        Metric::Energy,
        Metric::MobileMb,
        Metric::CacheMb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::OffloadPct => "offload_pct",
            Metric::TransferDelay => "transfer_delay_s",
            Metric::Energy => "energy_j",
            Metric::MobileMb => "mobile_mb",
            Metric::CacheMb => "cache_mb",
        }
    }

    pub fn of(self, outcome: &RunOutcome) -> f64 {
        match self {
            Metric::OffloadPct => outcome.offload_pct,
            Metric::TransferDelay => outcome.transfer_delay,
            Metric::Energy => outcome.energy_j,
            Metric::MobileMb => outcome.mobile_mb,
            Metric::CacheMb => outcome.cache_bytes_used,
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::OffloadPct | Metric::CacheMb)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub route_id: String,
    /// Unscaled route; `factors` are applied before running.
    pub route: RouteProfile,
    pub factors: RateFactors,
    pub task: TransferTask,
    /// Error magnitudes plus the scenario's base seed.
    pub errors: ErrorSpec,
    pub policies: Vec<Policy>,
    pub runs: usize,
    pub energy: EnergyModel,
    pub metrics: Vec<Metric>,
}

impl ScenarioSpec {
    /// Baseline setting on the bundled 4-hotspot route.
    pub fn baseline(class: TrafficClass) -> Self {
        let route = crate::config::bundled_route("route_4ap").expect("bundled route");
        let task = match class {
            TrafficClass::DelayTolerant => TransferTask::delay_tolerant(60.0, route.total_time()),
            TrafficClass::DelaySensitive => TransferTask::delay_sensitive(50.0),
        }
        .expect("valid baseline task");
        Self {
            id: format!("baseline-{class}"),
            route_id: "route_4ap".into(),
            route,
            factors: RateFactors::default(),
            task,
            errors: ErrorSpec::default(),
            policies: Policy::comparison_set(class),
            runs: 120,
            energy: EnergyModel::default(),
            metrics: Metric::ALL.to_vec(),
        }
    }

    pub fn nominal_route(&self) -> Result<RouteProfile> {
        self.route.scaled(self.factors)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of run `run` under base seed `seed`: `splitmix64(splitmix64(seed) ^ run)`.
/// Depends on nothing else, so adding policies never changes realizations.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ run as u64)
}

/// Two-sided 95 % Student-t half-width, `t(0.975, n-1) * s / sqrt(n)`.
pub fn ci_halfwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok(0.0);
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(t * var.sqrt() / nf.sqrt())
}

/// Gain of `a` over baseline `b` in percent. With `higher_is_better` this
/// is `(a - b) / b`; otherwise the reduction `(b - a) / b`.
pub fn relative_gain(a: f64, b: f64, higher_is_better: bool) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::DivisionByZero);
    }
    let diff = if higher_is_better { a - b } else { b - a };
    Ok(diff / b * 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricStat {
    pub metric: Metric,
    pub mean: f64,
    /// `None` with a single run.
    pub ci95: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyResult {
    pub policy: Policy,
    pub stats: Vec<MetricStat>,
    /// Runs where the object missed its deadline (or never completed).
    pub infeasible_count: usize,
    pub outcomes: Vec<RunOutcome>,
}

impl PolicyResult {
    pub fn stat(&self, metric: Metric) -> Option<&MetricStat> {
        self.stats.iter().find(|s| s.metric == metric)
    }

    pub fn samples(&self, metric: Metric) -> Vec<f64> {
        self.outcomes.iter().map(|o| metric.of(o)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateResult {
    pub scenario_id: String,
    pub policies: Vec<PolicyResult>,
}

/// One line of result CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub scenario_id: String,
    pub policy: &'static str,
    pub metric: &'static str,
    pub mean: f64,
    pub ci95: Option<f64>,
    pub n: usize,
    pub infeasible_count: usize,
}

impl AggregateResult {
    pub fn policy(&self, policy: Policy) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    pub fn mean(&self, policy: Policy, metric: Metric) -> Option<f64> {
        self.policy(policy)?.stat(metric).map(|s| s.mean)
    }

    pub fn ci95(&self, policy: Policy, metric: Metric) -> Option<f64> {
        self.policy(policy)?.stat(metric).and_then(|s| s.ci95)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.policies
            .iter()
            .flat_map(|p| {
                p.stats.iter().map(|s| CsvRow {
                    scenario_id: self.scenario_id.clone(),
                    policy: p.policy.name(),
                    metric: s.metric.name(),
                    mean: s.mean,
                    ci95: s.ci95,
                    n: s.n,
                    infeasible_count: p.infeasible_count,
                })
            })
            .collect()
    }
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<AggregateResult> {
    run_scenario_observed(spec, &|_, _, _| {})
}

/// Like [`run_scenario`], calling `observer(run, policy, realized_route)`
/// before every trip.
pub fn run_scenario_observed(
    spec: &ScenarioSpec,
    observer: &(dyn Fn(usize, Policy, &RouteProfile) + Sync),
) -> Result<AggregateResult> {
    if spec.runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    for p in &spec.policies {
        p.check(spec.task.class)?;
    }
    spec.energy.validate()?;
    let nominal = spec.nominal_route()?;

    let per_run: Vec<Vec<RunOutcome>> = (0..spec.runs)
        .into_par_iter()
        .map(|k| {
            let errors = spec.errors.with_seed(run_seed(spec.errors.seed, k));
            let realized = realize_route(&nominal, &errors);
            spec.policies
                .iter()
                .map(|&p| {
                    observer(k, p, &realized);
                    run_trip(&realized, &nominal, &spec.task, p, &errors, &spec.energy)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let policies = spec
        .policies
        .iter()
        .enumerate()
        .map(|(i, &policy)| {
            let outcomes: Vec<RunOutcome> = per_run.iter().map(|run| run[i].clone()).collect();
            let stats = spec
                .metrics
                .iter()
                .map(|&metric| {
                    let samples: Vec<f64> = outcomes.iter().map(|o| metric.of(o)).collect();
                    MetricStat {
                        metric,
                        mean: samples.iter().sum::<f64>() / samples.len() as f64,
                        ci95: ci_halfwidth(&samples).ok(),
                        n: samples.len(),
                    }
                })
                .collect();
            PolicyResult {
                policy,
                stats,
                infeasible_count: outcomes.iter().filter(|o| !o.deadline_met).count(),
                outcomes,
            }
        })
        .collect();

    Ok(AggregateResult {
        scenario_id: spec.id.clone(),
        policies,
    })
}
