//! Python bindings for `offload_core`.

use std::collections::HashMap;

use offload_core::config::{bundled_route, bundled_snr_table, load_experiment, Experiment, ScenarioFile};
use offload_core::metrics::{self, AggregateResult};
use offload_core::model::{snr_to_throughput as snr_lookup, Access};
use offload_core::prediction;
use offload_core::sweep::run_sweep;
use offload_core::{EnergyModel, ErrorSpec, Policy, RateFactors, RouteProfile, TrafficClass, TransferTask};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: offload_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn policy(name: &str) -> PyResult<Policy> {
    name.parse().map_err(err)
}

/// A route: ordered mobile and WiFi segments.
#[pyclass(frozen, skip_from_py_object, module = "offload")]
#[derive(Clone)]
pub struct Route {
    inner: RouteProfile,
}

#[pymethods]
impl Route {
    /// Builds a route from `(kind, seconds, rate, backhaul_rate)` tuples;
    /// `kind` is `"mobile"` or `"wifi"`, and mobile segments ignore the
    /// backhaul rate.
    #[new]
    fn new(segments: Vec<(String, f64, f64, f64)>) -> PyResult<Self> {
        let parts = segments
            .into_iter()
            .map(|(kind, secs, rate, backhaul)| match kind.as_str() {
                "mobile" => Ok((secs, Access::Mobile { rate })),
                "wifi" => Ok((secs, Access::WiFi { local_rate: rate, backhaul_rate: backhaul })),
                other => Err(PyValueError::new_err(format!("unknown segment kind `{other}`"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: RouteProfile::from_durations(parts).map_err(err)?,
        })
    }

    /// `route_2ap`, `route_4ap` or `route_8ap`, at full rates.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: bundled_route(name).map_err(err)?,
        })
    }

    /// Scales mobile, WiFi and backhaul rates by the given factors.
    #[pyo3(signature = (mobile = 1.0 / 3.0, wifi = 1.0 / 3.0, backhaul = 1.0 / 3.0))]
    fn scaled(&self, mobile: f64, wifi: f64, backhaul: f64) -> PyResult<Self> {
        let inner = self.inner.scaled(RateFactors { mobile, wifi, backhaul }).map_err(err)?;
        Ok(Self { inner })
    }

    /// Random realization with the given error magnitudes.
    #[pyo3(signature = (time_error = 0.1, throughput_error = 0.2, seed = 0))]
    fn realize(&self, time_error: f64, throughput_error: f64, seed: u64) -> PyResult<Self> {
        let errors = ErrorSpec::new(time_error, throughput_error, seed).map_err(err)?;
        Ok(Self {
            inner: prediction::realize_route(&self.inner, &errors),
        })
    }

    #[getter]
    fn total_time(&self) -> f64 {
        self.inner.total_time()
    }

    #[getter]
    fn hotspot_count(&self) -> usize {
        self.inner.hotspot_count()
    }

    /// `(kind, start, seconds, rate, backhaul_rate)` per segment.
    fn segments(&self) -> Vec<(&'static str, f64, f64, f64, f64)> {
        self.inner
            .segments()
            .iter()
            .map(|s| match s.access {
                Access::Mobile { rate } => ("mobile", s.start, s.duration, rate, 0.0),
                Access::WiFi { local_rate, backhaul_rate } => ("wifi", s.start, s.duration, local_rate, backhaul_rate),
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.segments().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Route({} segments, {} hotspots, {:.1}s)",
            self.inner.segments().len(),
            self.inner.hotspot_count(),
            self.inner.total_time()
        )
    }
}

#[pyclass(frozen, skip_from_py_object, module = "offload")]
#[derive(Clone)]
pub struct Task {
    inner: TransferTask,
}

#[pymethods]
impl Task {
    #[staticmethod]
    fn delay_tolerant(size_mb: f64, delay_threshold: f64) -> PyResult<Self> {
        Ok(Self {
            inner: TransferTask::delay_tolerant(size_mb, delay_threshold).map_err(err)?,
        })
    }

    #[staticmethod]
    fn delay_sensitive(size_mb: f64) -> PyResult<Self> {
        Ok(Self {
            inner: TransferTask::delay_sensitive(size_mb).map_err(err)?,
        })
    }

    #[getter]
    fn size_mb(&self) -> f64 {
        self.inner.size_mb
    }

    #[getter]
    fn delay_tolerant_class(&self) -> bool {
        self.inner.class == TrafficClass::DelayTolerant
    }

    fn __repr__(&self) -> String {
        format!("Task({} MB, {})", self.inner.size_mb, self.inner.class)
    }
}

#[pyclass(frozen, get_all, module = "offload")]
pub struct Outcome {
    offload_pct: f64,
    transfer_delay: f64,
    completed: bool,
    deadline_met: bool,
    plan_infeasible: bool,
    energy_j: f64,
    mobile_mb: f64,
    wifi_local_mb: f64,
    wifi_backhaul_mb: f64,
    cache_mb: f64,
}

#[pymethods]
impl Outcome {
    fn __repr__(&self) -> String {
        format!(
            "Outcome(offload={:.2}%, delay={:.2}s, energy={:.1}J, completed={})",
            self.offload_pct, self.transfer_delay, self.energy_j, self.completed
        )
    }
}

/// Runs one trip of `policy` on `realized`, planning against `nominal`.
#[pyfunction]
#[pyo3(signature = (realized, nominal, task, policy_name, time_error = 0.1, throughput_error = 0.2))]
fn run_trip(
    realized: &Route,
    nominal: &Route,
    task: &Task,
    policy_name: &str,
    time_error: f64,
    throughput_error: f64,
) -> PyResult<Outcome> {
    let errors = ErrorSpec::new(time_error, throughput_error, 0).map_err(err)?;
    let o = offload_core::run_trip(
        &realized.inner,
        &nominal.inner,
        &task.inner,
        policy(policy_name)?,
        &errors,
        &EnergyModel::default(),
    )
    .map_err(err)?;
    Ok(Outcome {
        offload_pct: o.offload_pct,
        transfer_delay: o.transfer_delay,
        completed: o.completed,
        deadline_met: o.deadline_met,
        plan_infeasible: o.plan_infeasible,
        energy_j: o.energy_j,
        mobile_mb: o.mobile_mb,
        wifi_local_mb: o.wifi_local_mb,
        wifi_backhaul_mb: o.wifi_backhaul_mb,
        cache_mb: o.cache_bytes_used,
    })
}

type Row = (String, String, String, f64, Option<f64>, usize, usize);

fn rows(results: &[AggregateResult]) -> Vec<Row> {
    results
        .iter()
        .flat_map(|r| r.csv_rows())
        .map(|r| (r.scenario_id, r.policy.into(), r.metric.into(), r.mean, r.ci95, r.n, r.infeasible_count))
        .collect()
}

/// Runs a scenario or sweep and returns result rows
/// `(scenario_id, policy, metric, mean, ci95, n, infeasible_count)`.
/// `source` is a bundled name (`default_dt`, `fig2a`), a file path, or
/// scenario JSON text.
#[pyfunction]
#[pyo3(signature = (source, runs = None, seed = None))]
fn run_scenario(py: Python<'_>, source: &str, runs: Option<usize>, seed: Option<u64>) -> PyResult<Vec<Row>> {
    let exp = if source.trim_start().starts_with('{') {
        let file = ScenarioFile::parse(source, "<json>").map_err(err)?;
        Experiment::Scenario(file.resolve("<json>", None).map_err(err)?)
    } else {
        load_experiment(source).map_err(err)?
    };
    let tweak = |s: &mut metrics::ScenarioSpec| {
        if let Some(r) = runs {
            s.runs = r.max(1);
        }
        if let Some(seed) = seed {
            s.errors.seed = seed;
        }
    };
    let results = py
        .detach(|| match exp {
            Experiment::Scenario(mut s) => {
                tweak(&mut s);
                metrics::run_scenario(&s).map(|r| vec![r])
            }
            Experiment::Sweep(mut s) => {
                tweak(&mut s.base);
                run_sweep(&s).map(|r| r.points)
            }
        })
        .map_err(err)?;
    Ok(rows(&results))
}

/// Half-width of the two-sided 95 % Student-t interval of the mean.
#[pyfunction]
fn ci_halfwidth(samples: Vec<f64>) -> PyResult<f64> {
    metrics::ci_halfwidth(&samples).map_err(err)
}

/// Relative gain of `a` over baseline `b` in percent.
#[pyfunction]
#[pyo3(signature = (a, b, higher_is_better = true))]
fn relative_gain(a: f64, b: f64, higher_is_better: bool) -> PyResult<f64> {
    metrics::relative_gain(a, b, higher_is_better).map_err(err)
}

/// `(wifi_rate, adsl_rate)` in Mbit/s for an SNR reading, bundled table.
#[pyfunction]
fn snr_to_throughput(snr_db: f64) -> (f64, f64) {
    snr_lookup(snr_db, &bundled_snr_table())
}

/// Planner's view of `route` from time `now`.
#[pyfunction]
#[pyo3(signature = (route, now, time_error = 0.1, throughput_error = 0.2, use_local_rate = true))]
fn build_prediction(
    route: &Route,
    now: f64,
    time_error: f64,
    throughput_error: f64,
    use_local_rate: bool,
) -> PyResult<HashMap<&'static str, PyObjectLike>> {
    let errors = ErrorSpec::new(time_error, throughput_error, 0).map_err(err)?;
    let p = prediction::build_prediction(&route.inner, now, &errors, use_local_rate);
    let hotspots = p
        .hotspots
        .iter()
        .map(|h| {
            HashMap::from([
                ("hotspot", h.hotspot as f64),
                ("starts_in", h.starts_in),
                ("t_min", h.t_min),
                ("t_max", h.t_max),
                ("r_min", h.r_min),
                ("r_max", h.r_max),
            ])
        })
        .collect();
    Ok(HashMap::from([
        ("hotspots", PyObjectLike::Hotspots(hotspots)),
        ("time_to_next_wifi", PyObjectLike::Num(p.time_to_next_wifi)),
        ("remaining_mobile_time", PyObjectLike::Num(p.remaining_mobile_time)),
        ("max_mobile_rate", PyObjectLike::Num(p.max_mobile_rate)),
    ]))
}

#[derive(IntoPyObject)]
enum PyObjectLike {
    Num(f64),
    Hotspots(Vec<HashMap<&'static str, f64>>),
}

#[pymodule]
fn offload(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Route>()?;
    m.add_class::<Task>()?;
    m.add_class::<Outcome>()?;
    m.add_function(wrap_pyfunction!(run_trip, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(ci_halfwidth, m)?)?;
    m.add_function(wrap_pyfunction!(relative_gain, m)?)?;
    m.add_function(wrap_pyfunction!(snr_to_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(build_prediction, m)?)?;
    m.add("POLICIES", Policy::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    Ok(())
}
