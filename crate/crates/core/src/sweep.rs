//! One-parameter sweeps over a base scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::bundled_route_for_hotspots;
use crate::error::{Error, Result};
use crate::metrics::{run_scenario, AggregateResult, ScenarioSpec};
use crate::model::TransferTask;
use crate::prediction::ErrorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Size,
    MobileFactor,
    WifiFactor,
    BackhaulFactor,
    TimeError,
    ThroughputError,
    HotspotCount,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Size => "size",
            SweepParam::MobileFactor => "mobile_factor",
            SweepParam::WifiFactor => "wifi_factor",
            SweepParam::BackhaulFactor => "backhaul_factor",
            SweepParam::TimeError => "time_error",
            SweepParam::ThroughputError => "throughput_error",
            SweepParam::HotspotCount => "hotspot_count",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Size => vec![30.0, 40.0, 50.0, 60.0, 70.0],
            SweepParam::MobileFactor | SweepParam::WifiFactor | SweepParam::BackhaulFactor => {
                vec![0.25, 1.0 / 3.0, 0.5, 1.0]
            }
            SweepParam::TimeError => vec![0.1, 0.2, 0.3, 0.4],
            SweepParam::ThroughputError => vec![0.2, 0.4, 0.6, 0.8],
            SweepParam::HotspotCount => vec![2.0, 4.0, 8.0],
        }
    }

    /// Scenario for one sweep point. The base seed is kept so that every
    /// point sees the same random draws.
    pub fn apply(self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut spec = base.clone();
        spec.id = format!("{}/{}={}", base.id, self.name(), format_value(value));
        match self {
            SweepParam::Size => {
                spec.task = TransferTask::new(value, base.task.delay_threshold, base.task.class)?;
            }
            SweepParam::MobileFactor => spec.factors.mobile = positive(self, value)?,
            SweepParam::WifiFactor => spec.factors.wifi = positive(self, value)?,
            SweepParam::BackhaulFactor => spec.factors.backhaul = positive(self, value)?,
            SweepParam::TimeError => {
                spec.errors = ErrorSpec::new(value, base.errors.throughput_error, base.errors.seed)?;
            }
            SweepParam::ThroughputError => {
                spec.errors = ErrorSpec::new(base.errors.time_error, value, base.errors.seed)?;
            }
            SweepParam::HotspotCount => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::param("hotspot_count", format!("{value} is not a count")));
                }
                let (route_id, route) = bundled_route_for_hotspots(value as usize)?;
                spec.route_id = route_id;
                spec.route = route;
            }
        }
        Ok(spec)
    }
}

fn positive(param: SweepParam, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param(param.name(), format!("{value} must be positive")))
    }
}

fn format_value(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(base: ScenarioSpec, param: SweepParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("values", "sweep needs at least one value"));
        }
        let spec = Self { base, param, values };
        spec.points()?;
        Ok(spec)
    }

    pub fn points(&self) -> Result<Vec<ScenarioSpec>> {
        self.values.iter().map(|&v| self.param.apply(&self.base, v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub points: Vec<AggregateResult>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let points = spec
        .points()?
        .par_iter()
        .map(run_scenario)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        param: spec.param,
        values: spec.values.clone(),
        points,
    })
}
