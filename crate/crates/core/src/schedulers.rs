//! Transfer policies.
//!
//! Planners are pure functions of the transfer progress and a
//! [`PredictionProfile`]. They run when the node leaves a hotspot (and once
//! at route start); entry actions are derived when it reaches one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mbit_to_mb, RouteProfile, TrafficClass, TransferTask};
use crate::prediction::{build_prediction, ErrorSpec, PredictionProfile};
use crate::ranges::RangeSet;

/// Floor on the mobile-only time left before the deadline.
pub const MIN_MOBILE_TIME: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "prefetch-dt")]
    PrefetchDelayTolerant,
    #[serde(rename = "prediction-dt")]
    PredictionOnlyDelayTolerant,
    #[serde(rename = "no-prediction")]
    NoPredictionOffload,
    #[serde(rename = "prefetch-ds")]
    PrefetchDelaySensitive,
    #[serde(rename = "mobile-only")]
    MobileOnly,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::PrefetchDelayTolerant,
        Policy::PredictionOnlyDelayTolerant,
        Policy::NoPredictionOffload,
        Policy::PrefetchDelaySensitive,
        Policy::MobileOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::PrefetchDelayTolerant => "prefetch-dt",
            Policy::PredictionOnlyDelayTolerant => "prediction-dt",
            Policy::NoPredictionOffload => "no-prediction",
            Policy::PrefetchDelaySensitive => "prefetch-ds",
            Policy::MobileOnly => "mobile-only",
        }
    }

    /// Delay-sensitive traffic has no prediction-only variant.
    pub fn admits(self, class: TrafficClass) -> bool {
        match class {
            TrafficClass::DelayTolerant => true,
            TrafficClass::DelaySensitive => matches!(
                self,
                Policy::PrefetchDelaySensitive | Policy::NoPredictionOffload | Policy::MobileOnly
            ),
        }
    }

    pub fn check(self, class: TrafficClass) -> Result<()> {
        if self.admits(class) {
            Ok(())
        } else {
            Err(Error::PolicyClassMismatch {
                policy: self,
                class,
            })
        }
    }

    pub fn prefetches(self) -> bool {
        matches!(
            self,
            Policy::PrefetchDelayTolerant | Policy::PrefetchDelaySensitive
        )
    }

    /// Whether the node uses the WiFi interface at all.
    pub fn uses_wifi(self) -> bool {
        self != Policy::MobileOnly
    }

    /// Default comparison set for a traffic class.
    pub fn comparison_set(class: TrafficClass) -> Vec<Policy> {
        match class {
            TrafficClass::DelayTolerant => vec![
                Policy::PrefetchDelayTolerant,
                Policy::PredictionOnlyDelayTolerant,
                Policy::NoPredictionOffload,
            ],
            TrafficClass::DelaySensitive => vec![
                Policy::PrefetchDelaySensitive,
                Policy::NoPredictionOffload,
                Policy::MobileOnly,
            ],
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::param(
                    "policy",
                    format!(
                        "unknown policy `{s}`, expected one of prefetch-dt, prediction-dt, \
                         no-prediction, prefetch-ds, mobile-only"
                    ),
                )
            })
    }
}

/// How fast to use the mobile network until the next replan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferPlan {
    /// Planned rate in Mbit/s (for saturating plans: the predicted maximum).
    pub mobile_rate: f64,
    pub valid_from: f64,
    /// Use whatever the channel delivers instead of throttling to `mobile_rate`.
    pub saturate: bool,
}

/// Data to push into the next hotspot's cache before the node arrives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CachePlan {
    pub hotspot: usize,
    pub amount_mb: f64,
    /// Absolute object position where the cached range starts.
    pub offset_mb: f64,
}

impl CachePlan {
    pub fn end_mb(&self) -> f64 {
        self.offset_mb + self.amount_mb
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitPlan {
    pub transfer: TransferPlan,
    pub cache: Option<CachePlan>,
    /// The mobile rate needed to meet the deadline exceeds what the mobile
    /// network is predicted to sustain. The plan is still usable.
    pub deadline_infeasible: bool,
}

/// Where the node stands in the object when planning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub object_mb: f64,
    pub received_mb: f64,
    /// Contiguous prefix received from position 0.
    pub prefix_mb: f64,
}

impl Progress {
    pub fn start(object_mb: f64) -> Self {
        Self {
            object_mb,
            received_mb: 0.0,
            prefix_mb: 0.0,
        }
    }

    pub fn remaining_mb(&self) -> f64 {
        (self.object_mb - self.received_mb).max(0.0)
    }
}

fn cache_for_next(progress: &Progress, pred: &PredictionProfile, mobile_rate: f64) -> Option<CachePlan> {
    let next = pred.next_hotspot()?;
    let offset = progress.prefix_mb + mbit_to_mb(mobile_rate * pred.time_to_next_wifi);
    let amount = mbit_to_mb(next.r_max * next.t_max).min((progress.object_mb - offset).max(0.0));
    Some(CachePlan {
        hotspot: next.hotspot,
        amount_mb: amount,
        offset_mb: offset,
    })
}

/// Stretches or trims `pieces` so they last `total` seconds: trailing
/// pieces are dropped past `total`, and a shortfall extends the last piece.
fn fit_pieces(pieces: &[(f64, f64)], total: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pieces.len());
    let mut left = total;
    for &(secs, rate) in pieces {
        if left <= 0.0 {
            break;
        }
        out.push((secs.min(left), rate));
        left -= secs;
    }
    if left > 0.0 {
        if let Some(last) = out.last_mut() {
            last.0 += left;
        }
    }
    out
}

/// Minimum mobile rate that still meets the deadline when every upcoming
/// hotspot performs at its lower bound. The plan is infeasible when a
/// mobile segment inside the horizon is slower than that rate; the rate is
/// then kept but capped at the fastest segment.
fn deadline_rate(progress: &Progress, time_left: f64, pred: &PredictionProfile, valid_from: f64) -> (TransferPlan, bool) {
    let mut wifi_mb = 0.0;
    let mut wifi_time = 0.0;
    for h in &pred.hotspots {
        if h.starts_in >= time_left {
            continue;
        }
        let t = h.t_min.min(time_left - h.starts_in);
        wifi_mb += mbit_to_mb(h.r_min * t);
        wifi_time += t;
    }
    let mobile_mb = (progress.remaining_mb() - wifi_mb).max(0.0);
    let mobile_time = (time_left - wifi_time).max(MIN_MOBILE_TIME);
    let required = mobile_mb * 8.0 / mobile_time;
    let pieces = fit_pieces(&pred.mobile_pieces, mobile_time);
    let slowest = pieces.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let fastest = pieces.iter().map(|p| p.1).fold(0.0, f64::max);
    let infeasible = mobile_mb > 0.0 && (pieces.is_empty() || required > slowest);
    let plan = TransferPlan {
        mobile_rate: required.min(fastest),
        valid_from,
        saturate: false,
    };
    (plan, infeasible)
}

/// Prediction + prefetching for delay-tolerant traffic, on hotspot exit.
/// `pred` must be built with local (cache) rates.
pub fn plan_exit_delay_tolerant(progress: &Progress, time_left: f64, pred: &PredictionProfile) -> ExitPlan {
    let (transfer, infeasible) = deadline_rate(progress, time_left, pred, 0.0);
    ExitPlan {
        cache: cache_for_next(progress, pred, transfer.mobile_rate),
        transfer,
        deadline_infeasible: infeasible,
    }
}

/// Prediction without prefetching. `pred` must be built with backhaul rates.
pub fn plan_exit_prediction_only(progress: &Progress, time_left: f64, pred: &PredictionProfile) -> ExitPlan {
    let (transfer, infeasible) = deadline_rate(progress, time_left, pred, 0.0);
    ExitPlan {
        transfer,
        cache: None,
        deadline_infeasible: infeasible,
    }
}

/// Prefetching for delay-sensitive traffic: the mobile network always runs
/// flat out; only the cache placement is planned.
pub fn plan_exit_delay_sensitive(progress: &Progress, pred: &PredictionProfile) -> ExitPlan {
    let transfer = TransferPlan {
        mobile_rate: pred.max_mobile_rate,
        valid_from: 0.0,
        saturate: true,
    };
    ExitPlan {
        cache: cache_for_next(progress, pred, transfer.mobile_rate),
        transfer,
        deadline_infeasible: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// Fetch from the object's origin over the hotspot backhaul.
    Origin,
    LocalCache,
}

/// One step of the in-hotspot schedule: fetch the missing part of
/// `[start_mb, end_mb)` from `source`, lowest positions first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryAction {
    pub source: Source,
    pub start_mb: f64,
    pub end_mb: f64,
    pub rate: f64,
}

/// Ordered actions on hotspot entry: repair the gap up to the cache offset
/// from origin, drain the cache, then spend the remaining dwell on origin.
pub fn plan_entry(
    received: &RangeSet,
    object_mb: f64,
    cache: Option<&CachePlan>,
    local_rate: f64,
    backhaul_rate: f64,
) -> Vec<EntryAction> {
    let origin = |start_mb, end_mb| EntryAction {
        source: Source::Origin,
        start_mb,
        end_mb,
        rate: backhaul_rate,
    };
    let mut actions = Vec::with_capacity(3);
    if let Some(cache) = cache {
        let prefix = received.prefix();
        actions.push(origin(prefix, cache.offset_mb.max(prefix).min(object_mb)));
        actions.push(EntryAction {
            source: Source::LocalCache,
            start_mb: cache.offset_mb,
            end_mb: cache.end_mb().min(object_mb),
            rate: local_rate,
        });
    }
    actions.push(origin(0.0, object_mb));
    actions
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    RouteStart,
    HotspotExit,
    HotspotEnter,
}

/// Everything a policy may look at when an event fires.
#[derive(Clone, Copy, Debug)]
pub struct PlanningState<'a> {
    pub task: &'a TransferTask,
    pub nominal: &'a RouteProfile,
    pub errors: &'a ErrorSpec,
    /// Position on the nominal timeline the event corresponds to.
    pub nominal_now: f64,
    /// Wall-clock time since route start.
    pub now: f64,
    pub received: &'a RangeSet,
    /// Cache prepared for the hotspot being entered, if any.
    pub cache: Option<&'a CachePlan>,
    /// Realized rates of the hotspot being entered.
    pub local_rate: f64,
    pub backhaul_rate: f64,
}

impl PlanningState<'_> {
    pub fn progress(&self) -> Progress {
        Progress {
            object_mb: self.task.size_mb,
            received_mb: self.received.total().min(self.task.size_mb),
            prefix_mb: self.received.prefix(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    /// Use the mobile network under this plan (and maybe prepare a cache).
    Mobile(ExitPlan),
    /// Work through these actions while inside the hotspot.
    WiFi(Vec<EntryAction>),
}

pub fn policy_dispatch(policy: Policy, event: Event, state: &PlanningState<'_>) -> Result<Decision> {
    policy.check(state.task.class)?;
    let progress = state.progress();
    let time_left = state.task.effective_deadline() - state.now;
    let predict = |local| build_prediction(state.nominal, state.nominal_now, state.errors, local);
    let stamp = |mut plan: ExitPlan| {
        plan.transfer.valid_from = state.now;
        plan
    };

    if event == Event::HotspotEnter {
        return Ok(match policy {
            Policy::MobileOnly => {
                Decision::Mobile(stamp(saturating_plan(state.nominal.mobile_rate_during(
                    segment_at(state.nominal, state.nominal_now),
                ))))
            }
            p => Decision::WiFi(plan_entry(
                state.received,
                state.task.size_mb,
                if p.prefetches() { state.cache } else { None },
                state.local_rate,
                state.backhaul_rate,
            )),
        });
    }

    let plan = match policy {
        Policy::PrefetchDelayTolerant => plan_exit_delay_tolerant(&progress, time_left, &predict(true)),
        Policy::PredictionOnlyDelayTolerant => {
            plan_exit_prediction_only(&progress, time_left, &predict(false))
        }
        Policy::PrefetchDelaySensitive => plan_exit_delay_sensitive(&progress, &predict(true)),
        Policy::NoPredictionOffload | Policy::MobileOnly => {
            saturating_plan(predict(false).max_mobile_rate)
        }
    };
    Ok(Decision::Mobile(stamp(plan)))
}

fn saturating_plan(rate: f64) -> ExitPlan {
    ExitPlan {
        transfer: TransferPlan {
            mobile_rate: rate,
            valid_from: 0.0,
            saturate: true,
        },
        cache: None,
        deadline_infeasible: false,
    }
}

fn segment_at(route: &RouteProfile, t: f64) -> usize {
    let segs = route.segments();
    segs.iter()
        .position(|s| t < s.end())
        .unwrap_or(segs.len() - 1)
}
