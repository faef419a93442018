//! Fluid-flow execution of one realized trip.
//!
//! The engine walks the realized timeline segment by segment. Planning
//! happens at route start and at every realized hotspot exit, against the
//! nominal route; transfers integrate rate x time with exact crossing times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{mbit_to_mb, Access, EnergyModel, RouteProfile, TransferTask};
use crate::prediction::ErrorSpec;
use crate::ranges::{RangeSet, GAP_EPS};
use crate::schedulers::{
    policy_dispatch, CachePlan, Decision, Event, ExitPlan, PlanningState, Policy, Source,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Mobile,
    WiFiLocal,
    WiFiBackhaul,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferState {
    pub object_mb: f64,
    pub received: RangeSet,
    pub mobile_mb: f64,
    pub wifi_local_mb: f64,
    pub wifi_backhaul_mb: f64,
    pub completion_time: Option<f64>,
}

impl TransferState {
    pub fn new(object_mb: f64) -> Self {
        Self {
            object_mb,
            received: RangeSet::new(),
            mobile_mb: 0.0,
            wifi_local_mb: 0.0,
            wifi_backhaul_mb: 0.0,
            completion_time: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.completion_time.is_some()
    }

    pub fn channel_total(&self) -> f64 {
        self.mobile_mb + self.wifi_local_mb + self.wifi_backhaul_mb
    }

    /// Moves data over `channel` at `rate` for up to `duration` seconds,
    /// filling the missing part of `[range.0, range.1)` lowest-first.
    /// Stops early when the range runs out; returns the seconds used.
    pub fn integrate_segment(
        &mut self,
        t0: f64,
        rate: f64,
        duration: f64,
        channel: Channel,
        range: (f64, f64),
    ) -> f64 {
        if rate <= 0.0 || duration <= 0.0 || self.is_complete() {
            return 0.0;
        }
        let capacity = mbit_to_mb(rate * duration);
        let end = range.1.min(self.object_mb);
        let moved = self.received.fill_ascending(range.0, end, capacity);
        match channel {
            Channel::Mobile => self.mobile_mb += moved,
            Channel::WiFiLocal => self.wifi_local_mb += moved,
            Channel::WiFiBackhaul => self.wifi_backhaul_mb += moved,
        }
        let used = if moved < capacity {
            (moved * 8.0 / rate).min(duration)
        } else {
            duration
        };
        if self.received.covers(0.0, self.object_mb) {
            self.completion_time = Some(t0 + used);
        }
        used
    }
}

/// Channel usage over a trip, as needed for energy accounting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActivityLog {
    pub mobile_mb: f64,
    pub wifi_mb: f64,
    /// `(entry, exit)` of every hotspot window while the WiFi interface is in use.
    pub wifi_windows: Vec<(f64, f64)>,
    /// Seconds spent actually transferring over WiFi.
    pub wifi_busy_s: f64,
    /// Accounting stops here (completion, or end of route).
    pub end_time: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub mobile_transfer_j: f64,
    pub wifi_transfer_j: f64,
    pub wifi_idle_j: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.mobile_transfer_j + self.wifi_transfer_j + self.wifi_idle_j
    }
}

/// Transfer energy per MB plus idle power for the time the WiFi interface is
/// on but not transferring. The interface is on from `wifi_preactivation_s`
/// before each hotspot until leaving it.
pub fn account_energy(log: &ActivityLog, model: &EnergyModel) -> EnergyBreakdown {
    let mut windows: Vec<(f64, f64)> = log
        .wifi_windows
        .iter()
        .map(|&(entry, exit)| {
            (
                (entry - model.wifi_preactivation_s).max(0.0),
                exit.min(log.end_time),
            )
        })
        .filter(|(s, e)| e > s)
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut on_time = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (s, e) in windows {
        match current {
            Some((cs, ce)) if s <= ce => current = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                on_time += ce - cs;
                current = Some((s, e));
            }
            None => current = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = current {
        on_time += ce - cs;
    }
    EnergyBreakdown {
        mobile_transfer_j: model.mobile_transfer_j_per_mb * log.mobile_mb,
        wifi_transfer_j: model.wifi_transfer_j_per_mb * log.wifi_mb,
        wifi_idle_j: model.wifi_idle_w * (on_time - log.wifi_busy_s).max(0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub offload_pct: f64,
    /// Completion time, or the route's total time if the object never completed.
    pub transfer_delay: f64,
    pub completed: bool,
    pub deadline_met: bool,
    /// Some replan flagged the deadline as unreachable.
    pub plan_infeasible: bool,
    pub energy: EnergyBreakdown,
    pub energy_j: f64,
    pub mobile_mb: f64,
    pub wifi_local_mb: f64,
    pub wifi_backhaul_mb: f64,
    /// Data served from hotspot caches.
    pub cache_bytes_used: f64,
    pub completion_time: Option<f64>,
}

/// Everything a trip produced, for callers that want more than the summary.
#[derive(Clone, Debug)]
pub struct TripTrace {
    pub outcome: RunOutcome,
    pub state: TransferState,
    /// Plans in the order they were made, with the realized time.
    pub plans: Vec<(f64, ExitPlan)>,
    /// Prefix when each hotspot was entered.
    pub entry_prefix: Vec<f64>,
}

pub fn run_trip(
    realized: &RouteProfile,
    nominal: &RouteProfile,
    task: &TransferTask,
    policy: Policy,
    errors: &ErrorSpec,
    energy: &EnergyModel,
) -> Result<RunOutcome> {
    trace_trip(realized, nominal, task, policy, errors, energy).map(|t| t.outcome)
}

pub fn trace_trip(
    realized: &RouteProfile,
    nominal: &RouteProfile,
    task: &TransferTask,
    policy: Policy,
    errors: &ErrorSpec,
    energy: &EnergyModel,
) -> Result<TripTrace> {
    policy.check(task.class)?;
    if !realized.same_structure(nominal) {
        return Err(Error::RouteMismatch);
    }
    let mut state = TransferState::new(task.size_mb);
    let mut plans: Vec<(f64, ExitPlan)> = Vec::new();
    let mut entry_prefix = Vec::new();
    let mut wifi_busy = 0.0;

    let plan = |state: &TransferState,
                    event: Event,
                    nominal_now: f64,
                    now: f64,
                    plans: &mut Vec<(f64, ExitPlan)>|
     -> Result<()> {
        let ps = PlanningState {
            task,
            nominal,
            errors,
            nominal_now,
            now,
            received: &state.received,
            cache: None,
            local_rate: 0.0,
            backhaul_rate: 0.0,
        };
        if let Decision::Mobile(p) = policy_dispatch(policy, event, &ps)? {
            plans.push((now, p));
        }
        Ok(())
    };

    plan(&state, Event::RouteStart, 0.0, 0.0, &mut plans)?;

    for (i, seg) in realized.segments().iter().enumerate() {
        if state.is_complete() {
            break;
        }
        let nominal_seg = &nominal.segments()[i];
        let current = plans.last().map(|(_, p)| *p).expect("route start always plans");
        match seg.access {
            Access::Mobile { rate } => {
                let rate = if current.transfer.saturate {
                    rate
                } else {
                    current.transfer.mobile_rate.min(rate)
                };
                state.integrate_segment(seg.start, rate, seg.duration, Channel::Mobile, (0.0, task.size_mb));
            }
            Access::WiFi {
                local_rate,
                backhaul_rate,
            } => {
                entry_prefix.push(state.received.prefix());
                let cache: Option<CachePlan> = current.cache.filter(|c| Some(c.hotspot) == seg.hotspot);
                let ps = PlanningState {
                    task,
                    nominal,
                    errors,
                    nominal_now: nominal_seg.start,
                    now: seg.start,
                    received: &state.received,
                    cache: cache.as_ref(),
                    local_rate,
                    backhaul_rate,
                };
                match policy_dispatch(policy, Event::HotspotEnter, &ps)? {
                    Decision::Mobile(p) => {
                        let rate = realized.mobile_rate_during(i);
                        let rate = if p.transfer.saturate { rate } else { p.transfer.mobile_rate.min(rate) };
                        state.integrate_segment(seg.start, rate, seg.duration, Channel::Mobile, (0.0, task.size_mb));
                    }
                    Decision::WiFi(actions) => {
                        let mut t = seg.start;
                        let mut left = seg.duration;
                        for a in actions {
                            if left <= 0.0 || state.is_complete() {
                                break;
                            }
                            let channel = match a.source {
                                Source::Origin => Channel::WiFiBackhaul,
                                Source::LocalCache => Channel::WiFiLocal,
                            };
                            let used = state.integrate_segment(t, a.rate, left, channel, (a.start_mb, a.end_mb));
                            wifi_busy += used;
                            t += used;
                            left -= used;
                        }
                    }
                }
                if !state.is_complete() {
                    plan(&state, Event::HotspotExit, nominal_seg.end(), seg.end(), &mut plans)?;
                }
            }
        }
    }

    let completion = state.completion_time;
    let end_time = completion.unwrap_or(realized.total_time());
    let wifi_mb = state.wifi_local_mb + state.wifi_backhaul_mb;
    let log = ActivityLog {
        mobile_mb: state.mobile_mb,
        wifi_mb,
        wifi_windows: if policy.uses_wifi() {
            realized
                .segments()
                .iter()
                .filter(|s| s.hotspot.is_some())
                .map(|s| (s.start, s.end()))
                .collect()
        } else {
            Vec::new()
        },
        wifi_busy_s: wifi_busy,
        end_time,
    };
    let breakdown = account_energy(&log, energy);
    let outcome = RunOutcome {
        offload_pct: (wifi_mb / task.size_mb * 100.0).clamp(0.0, 100.0),
        transfer_delay: end_time,
        completed: completion.is_some(),
        deadline_met: completion.is_some_and(|t| t <= task.effective_deadline() + GAP_EPS),
        plan_infeasible: plans.iter().any(|(_, p)| p.deadline_infeasible),
        energy: breakdown,
        energy_j: breakdown.total(),
        mobile_mb: state.mobile_mb,
        wifi_local_mb: state.wifi_local_mb,
        wifi_backhaul_mb: state.wifi_backhaul_mb,
        cache_bytes_used: state.wifi_local_mb,
        completion_time: completion,
    };
    Ok(TripTrace {
        outcome,
        state,
        plans,
        entry_prefix,
    })
}
