//! JSON file formats: routes, SNR table, energy model, scenarios and sweeps.
//!
//! Route files list segments in order. Each segment gives either a `start`
//! time (the route then needs a top-level `end`) or a `duration`:
//!
//! ```json
//! { "end": 269, "segments": [
//!     { "access": "mobile", "start": 0,  "rate": 4.83 },
//!     { "access": "wifi",   "start": 18, "wifi_rate": 16.16, "adsl_rate": 6.81 },
//!     { "access": "wifi",   "start": 36, "snr_db": -85 } ] }
//! ```
//!
//! A WiFi segment gives its local and backhaul rates directly or an
//! `snr_db` reading that is mapped through the SNR table.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{Metric, ScenarioSpec};
use crate::model::{
    Access, AccessKind, EnergyModel, RateFactors, RouteProfile, RouteSegment, SnrBand, SnrTable,
    TrafficClass, TransferTask,
};
use crate::prediction::ErrorSpec;
use crate::schedulers::Policy;
use crate::sweep::{SweepParam, SweepSpec};

const ROUTE_4AP: &str = include_str!("../data/route_4ap.json");
const ROUTE_2AP: &str = include_str!("../data/route_2ap.json");
const ROUTE_8AP: &str = include_str!("../data/route_8ap.json");
const SNR_TABLE: &str = include_str!("../data/snr_table.json");
const ENERGY: &str = include_str!("../data/energy.json");

const RECIPES: [(&str, &str); 20] = [
    ("fig2a", include_str!("../data/recipes/fig2a.json")),
    ("fig2b", include_str!("../data/recipes/fig2b.json")),
    ("fig3a", include_str!("../data/recipes/fig3a.json")),
    ("fig3b", include_str!("../data/recipes/fig3b.json")),
    ("fig3c", include_str!("../data/recipes/fig3c.json")),
    ("fig3d", include_str!("../data/recipes/fig3d.json")),
    ("fig4a", include_str!("../data/recipes/fig4a.json")),
    ("fig4b", include_str!("../data/recipes/fig4b.json")),
    ("fig5a", include_str!("../data/recipes/fig5a.json")),
    ("fig5b", include_str!("../data/recipes/fig5b.json")),
    ("fig6a", include_str!("../data/recipes/fig6a.json")),
    ("fig6b", include_str!("../data/recipes/fig6b.json")),
    ("fig7a", include_str!("../data/recipes/fig7a.json")),
    ("fig7b", include_str!("../data/recipes/fig7b.json")),
    ("fig7c", include_str!("../data/recipes/fig7c.json")),
    ("fig7d", include_str!("../data/recipes/fig7d.json")),
    ("fig8a", include_str!("../data/recipes/fig8a.json")),
    ("fig8b", include_str!("../data/recipes/fig8b.json")),
    ("fig9a", include_str!("../data/recipes/fig9a.json")),
    ("fig9b", include_str!("../data/recipes/fig9b.json")),
];

const SCENARIOS: [(&str, &str); 2] = [
    ("default_dt", include_str!("../data/scenarios/default_dt.json")),
    ("default_ds", include_str!("../data/scenarios/default_ds.json")),
];

pub const BUNDLED_ROUTES: [&str; 3] = ["route_2ap", "route_4ap", "route_8ap"];

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, source_name: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::config(source_name, e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read file: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct RouteFile {
    name: Option<String>,
    comment: Option<String>,
    end: Option<f64>,
    segments: Vec<SegmentEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct SegmentEntry {
    label: Option<u32>,
    access: AccessKind,
    start: Option<f64>,
    duration: Option<f64>,
    rate: Option<f64>,
    wifi_rate: Option<f64>,
    adsl_rate: Option<f64>,
    snr_db: Option<f64>,
}

pub fn parse_route(text: &str, source_name: &str, snr: &SnrTable) -> Result<RouteProfile> {
    let file: RouteFile = parse_json(text, source_name)?;
    let err = |i: usize, msg: &str| Error::config(source_name, format!("segments[{i}]: {msg}"));
    if file.segments.is_empty() {
        return Err(Error::config(source_name, "`segments` is empty"));
    }
    let by_start = file.segments.iter().all(|s| s.start.is_some());
    let by_duration = file.segments.iter().all(|s| s.duration.is_some());
    if by_start == by_duration {
        return Err(Error::config(
            source_name,
            "give every segment either `start` or `duration` (not both, not a mix)",
        ));
    }
    if by_start && file.end.is_none() {
        return Err(Error::config(source_name, "`end` is required when segments use `start`"));
    }

    let mut segments: Vec<RouteSegment> = Vec::with_capacity(file.segments.len());
    for (i, entry) in file.segments.iter().enumerate() {
        let (start, duration) = match (entry.start, entry.duration) {
            (Some(start), _) => {
                let next = file.segments.get(i + 1).and_then(|s| s.start).or(file.end);
                (start, next.unwrap_or(start) - start)
            }
            (None, Some(duration)) => (segments.last().map_or(0.0, RouteSegment::end), duration),
            (None, None) => unreachable!("checked above"),
        };
        let access = match entry.access {
            AccessKind::Mobile => {
                if entry.wifi_rate.is_some() || entry.adsl_rate.is_some() || entry.snr_db.is_some() {
                    return Err(err(i, "mobile segment takes only `rate`"));
                }
                let rate = entry.rate.ok_or_else(|| err(i, "mobile segment needs `rate`"))?;
                Access::Mobile { rate }
            }
            AccessKind::WiFi => {
                if entry.rate.is_some() {
                    return Err(err(i, "wifi segment takes `wifi_rate` + `adsl_rate` or `snr_db`, not `rate`"));
                }
                let (local, backhaul) = match (entry.wifi_rate, entry.adsl_rate, entry.snr_db) {
                    (Some(w), Some(a), None) => (w, a),
                    (None, None, Some(db)) => snr.lookup(db),
                    _ => return Err(err(i, "wifi segment needs `wifi_rate` and `adsl_rate`, or `snr_db`")),
                };
                if local < backhaul {
                    return Err(err(i, &format!("wifi_rate {local} is below adsl_rate {backhaul}")));
                }
                Access::WiFi {
                    local_rate: local,
                    backhaul_rate: backhaul,
                }
            }
        };
        segments.push(RouteSegment {
            start,
            duration,
            access,
            hotspot: None,
        });
    }
    RouteProfile::new(segments).map_err(|e| Error::config(source_name, e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct SnrFile {
    comment: Option<String>,
    bands: Vec<SnrBand>,
}

pub fn parse_snr_table(text: &str, source_name: &str) -> Result<SnrTable> {
    let file: SnrFile = parse_json(text, source_name)?;
    SnrTable::new(file.bands).map_err(|e| Error::config(source_name, e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct EnergyFile {
    comment: Option<String>,
    mobile_transfer_j_per_mb: f64,
    wifi_transfer_j_per_mb: f64,
    wifi_idle_w: f64,
    wifi_preactivation_s: f64,
}

pub fn parse_energy(text: &str, source_name: &str) -> Result<EnergyModel> {
    let f: EnergyFile = parse_json(text, source_name)?;
    let model = EnergyModel {
        mobile_transfer_j_per_mb: f.mobile_transfer_j_per_mb,
        wifi_transfer_j_per_mb: f.wifi_transfer_j_per_mb,
        wifi_idle_w: f.wifi_idle_w,
        wifi_preactivation_s: f.wifi_preactivation_s,
    };
    model.validate().map_err(|e| Error::config(source_name, e.to_string()))?;
    Ok(model)
}

pub fn bundled_snr_table() -> SnrTable {
    parse_snr_table(SNR_TABLE, "snr_table.json").expect("bundled SNR table is valid")
}

pub fn bundled_energy() -> EnergyModel {
    parse_energy(ENERGY, "energy.json").expect("bundled energy model is valid")
}

/// One of `route_2ap`, `route_4ap`, `route_8ap`.
pub fn bundled_route(name: &str) -> Result<RouteProfile> {
    let text = match name {
        "route_4ap" => ROUTE_4AP,
        "route_2ap" => ROUTE_2AP,
        "route_8ap" => ROUTE_8AP,
        other => {
            return Err(Error::config(
                "route",
                format!("unknown bundled route `{other}` (have {})", BUNDLED_ROUTES.join(", ")),
            ))
        }
    };
    parse_route(text, &format!("{name}.json"), &bundled_snr_table())
}

pub fn bundled_route_for_hotspots(count: usize) -> Result<(String, RouteProfile)> {
    let name = format!("route_{count}ap");
    let route = bundled_route(&name).map_err(|_| {
        Error::config("hotspots", format!("no bundled layout with {count} hotspots (have 2, 4, 8)"))
    })?;
    Ok((name, route))
}

/// Names of the bundled figure recipes, `fig2a` to `fig9b`.
pub fn bundled_recipe_names() -> impl Iterator<Item = &'static str> {
    RECIPES.iter().map(|(n, _)| *n)
}

pub fn bundled_recipe(name: &str) -> Result<SweepSpec> {
    let (_, text) = RECIPES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::config("recipe", format!("unknown bundled recipe `{name}`")))?;
    let source = format!("{name}.json");
    SweepFile::parse(text, &source)?.resolve(&source, None)
}

/// The baseline scenarios, `default_dt` and `default_ds`.
pub fn bundled_scenarios() -> Vec<ScenarioSpec> {
    SCENARIOS
        .iter()
        .map(|(name, text)| {
            let source = format!("{name}.json");
            ScenarioFile::parse(text, &source)
                .and_then(|f| f.resolve(&source, None))
                .expect("bundled scenario is valid")
        })
        .collect()
}

/// A rate factor or other sweep value: a number, or text such as `"M/3"`,
/// `"1/4"` or `"A"` (factor 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor(pub f64);

impl<'de> Deserialize<'de> for Factor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Factor;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a fraction such as \"M/3\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Factor, E> {
                Ok(Factor(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Factor, E> {
                Ok(Factor(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Factor, E> {
                Ok(Factor(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Factor, E> {
                parse_factor(v).map(Factor).ok_or_else(|| E::custom(format!("cannot read `{v}` as a factor")))
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

fn parse_factor(text: &str) -> Option<f64> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let num = if !num.is_empty() && num.chars().all(|c| c.is_ascii_alphabetic()) {
        1.0
    } else {
        num.parse().ok()?
    };
    let den: f64 = match den {
        Some(d) => d.parse().ok()?,
        None => 1.0,
    };
    (den != 0.0).then_some(num / den)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FactorsEntry {
    mobile: Factor,
    wifi: Factor,
    backhaul: Factor,
}

impl Default for FactorsEntry {
    fn default() -> Self {
        let third = Factor(1.0 / 3.0);
        Self {
            mobile: third,
            wifi: third,
            backhaul: third,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TaskEntry {
    class: TrafficClass,
    size_mb: Option<f64>,
    delay_threshold: Option<f64>,
}

impl Default for TaskEntry {
    fn default() -> Self {
        Self {
            class: TrafficClass::DelayTolerant,
            size_mb: None,
            delay_threshold: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ErrorsEntry {
    time_error: f64,
    throughput_error: f64,
}

impl Default for ErrorsEntry {
    fn default() -> Self {
        let d = ErrorSpec::default();
        Self {
            time_error: d.time_error,
            throughput_error: d.throughput_error,
        }
    }
}

/// Scenario file. Every field is optional; defaults are the baseline
/// setting (4 hotspots, M/3 W/3 A/3, 10 % time and 20 % throughput error,
/// 60 MB delay-tolerant or 50 MB delay-sensitive, 120 runs, seed 0).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    id: Option<String>,
    #[allow(dead_code)]
    comment: Option<String>,
    /// Bundled route name or a path relative to the scenario file.
    route: Option<String>,
    hotspots: Option<usize>,
    snr_table: Option<String>,
    energy: Option<String>,
    factors: FactorsEntry,
    task: TaskEntry,
    errors: ErrorsEntry,
    seed: Option<u64>,
    runs: Option<usize>,
    policies: Option<Vec<Policy>>,
    metrics: Option<Vec<Metric>>,
}

impl ScenarioFile {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        parse_json(text, source_name)
    }

    /// Resolves file references relative to `base_dir` and validates.
    pub fn resolve(&self, source_name: &str, base_dir: Option<&Path>) -> Result<ScenarioSpec> {
        let cfg = |msg: String| Error::config(source_name, msg);
        let locate = |p: &str| -> PathBuf {
            match base_dir {
                Some(dir) if Path::new(p).is_relative() => dir.join(p),
                _ => PathBuf::from(p),
            }
        };

        let snr = match &self.snr_table {
            Some(p) => {
                let path = locate(p);
                parse_snr_table(&read(&path)?, &path.display().to_string())?
            }
            None => bundled_snr_table(),
        };
        let energy = match &self.energy {
            Some(p) => {
                let path = locate(p);
                parse_energy(&read(&path)?, &path.display().to_string())?
            }
            None => bundled_energy(),
        };
        let (route_id, route) = match (&self.route, self.hotspots) {
            (Some(_), Some(_)) => return Err(cfg("give `route` or `hotspots`, not both".into())),
            (None, Some(n)) => bundled_route_for_hotspots(n).map_err(|e| cfg(e.to_string()))?,
            (None, None) => ("route_4ap".to_string(), bundled_route("route_4ap")?),
            (Some(name), None) if BUNDLED_ROUTES.contains(&name.as_str()) => {
                (name.clone(), bundled_route(name)?)
            }
            (Some(p), None) => {
                let path = locate(p);
                let route = parse_route(&read(&path)?, &path.display().to_string(), &snr)?;
                (p.clone(), route)
            }
        };

        let class = self.task.class;
        let size_mb = self.task.size_mb.unwrap_or(match class {
            TrafficClass::DelayTolerant => 60.0,
            TrafficClass::DelaySensitive => 50.0,
        });
        let task = match class {
            TrafficClass::DelayTolerant => TransferTask::delay_tolerant(
                size_mb,
                self.task.delay_threshold.unwrap_or(route.total_time()),
            ),
            TrafficClass::DelaySensitive => TransferTask::delay_sensitive(size_mb),
        }
        .map_err(|e| cfg(format!("task: {e}")))?;

        let errors = ErrorSpec::new(
            self.errors.time_error,
            self.errors.throughput_error,
            self.seed.unwrap_or(0),
        )
        .map_err(|e| cfg(format!("errors: {e}")))?;

        let policies = self.policies.clone().unwrap_or_else(|| Policy::comparison_set(class));
        if policies.is_empty() {
            return Err(cfg("`policies` is empty".into()));
        }
        for p in &policies {
            p.check(class).map_err(|e| cfg(format!("policies: {e}")))?;
        }

        let runs = self.runs.unwrap_or(120);
        if runs == 0 {
            return Err(cfg("`runs` must be at least 1".into()));
        }
        let factors = RateFactors {
            mobile: self.factors.mobile.0,
            wifi: self.factors.wifi.0,
            backhaul: self.factors.backhaul.0,
        };
        route.scaled(factors).map_err(|e| cfg(format!("factors: {e}")))?;

        Ok(ScenarioSpec {
            id: self.id.clone().unwrap_or_else(|| "scenario".to_string()),
            route_id,
            route,
            factors,
            task,
            errors,
            policies,
            runs,
            energy,
            metrics: self.metrics.clone().unwrap_or_else(|| Metric::ALL.to_vec()),
        })
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let name = path.display().to_string();
    ScenarioFile::parse(&read(path)?, &name)?.resolve(&name, path.parent())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    id: Option<String>,
    #[allow(dead_code)]
    comment: Option<String>,
    #[serde(default)]
    base: ScenarioFile,
    parameter: SweepParam,
    values: Option<Vec<Factor>>,
}

impl SweepFile {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        parse_json(text, source_name)
    }

    pub fn resolve(&self, source_name: &str, base_dir: Option<&Path>) -> Result<SweepSpec> {
        let mut base = self.base.resolve(source_name, base_dir)?;
        if let Some(id) = &self.id {
            base.id = id.clone();
        }
        let values = match &self.values {
            Some(v) => v.iter().map(|f| f.0).collect(),
            None => self.parameter.default_values(),
        };
        SweepSpec::new(base, self.parameter, values).map_err(|e| Error::config(source_name, e.to_string()))
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let name = path.display().to_string();
    SweepFile::parse(&read(path)?, &name)?.resolve(&name, path.parent())
}

/// A scenario or a sweep, as found in one file.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Scenario(ScenarioSpec),
    Sweep(SweepSpec),
}

/// Loads a scenario or sweep file; files with a `parameter` field are
/// sweeps. A name without a matching file (`fig2a`, `default_dt`) selects
/// the bundled recipe or scenario of that name.
pub fn load_experiment(path_or_name: &str) -> Result<Experiment> {
    let path = Path::new(path_or_name);
    if !path.exists() {
        if bundled_recipe_names().any(|n| n == path_or_name) {
            return bundled_recipe(path_or_name).map(Experiment::Sweep);
        }
        if let Some((name, text)) = SCENARIOS.iter().find(|(n, _)| *n == path_or_name) {
            let source = format!("{name}.json");
            return ScenarioFile::parse(text, &source)?
                .resolve(&source, None)
                .map(Experiment::Scenario);
        }
    }
    let text = read(path)?;
    let name = path.display().to_string();
    let value: serde_json::Value = parse_json(&text, &name)?;
    if value.get("parameter").is_some() {
        SweepFile::parse(&text, &name)?.resolve(&name, path.parent()).map(Experiment::Sweep)
    } else {
        ScenarioFile::parse(&text, &name)?.resolve(&name, path.parent()).map(Experiment::Scenario)
    }
}
