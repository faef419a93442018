//! Brute-force time-stepped reference for the trip engine.
//!
//! Moves data in fixed steps of `dt` seconds (cut short at segment ends)
//! and keeps received ranges in a plain list. Policies are consulted at the
//! same events as in the engine. Completion is reported at the end of the
//! step that finishes the object, so it lags the exact time by at most `dt`.

use crate::engine::RunOutcome;
use crate::error::{Error, Result};
use crate::model::{Access, RouteProfile, TransferTask};
use crate::prediction::ErrorSpec;
use crate::ranges::RangeSet;
use crate::schedulers::{policy_dispatch, CachePlan, Decision, Event, ExitPlan, PlanningState, Policy, Source};

const EPS: f64 = 1e-9;

/// Byte tolerance as a fraction of the object size.
pub const BYTE_TOLERANCE: f64 = 0.001;
/// Completion time tolerance in seconds.
pub const TIME_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutcome {
    pub mobile_mb: f64,
    pub wifi_local_mb: f64,
    pub wifi_backhaul_mb: f64,
    pub completion_time: Option<f64>,
}

struct Received {
    size: f64,
    pieces: Vec<(f64, f64)>,
}

impl Received {
    fn add(&mut self, s: f64, e: f64) {
        self.pieces.push((s, e));
        self.pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(self.pieces.len());
        for &(s, e) in &self.pieces {
            match merged.last_mut() {
                Some(last) if s <= last.1 + EPS => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        self.pieces = merged;
    }

    fn gaps(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut at = lo;
        for &(s, e) in &self.pieces {
            if e <= at {
                continue;
            }
            if s >= hi {
                break;
            }
            if s > at + EPS {
                out.push((at, s));
            }
            at = at.max(e);
        }
        if at < hi - EPS {
            out.push((at, hi));
        }
        out
    }

    /// Takes up to `amount` MB of `[lo, hi)`, lowest first.
    fn take(&mut self, lo: f64, hi: f64, amount: f64) -> f64 {
        let mut got = 0.0;
        for (s, e) in self.gaps(lo, hi.min(self.size)) {
            let n = (e - s).min(amount - got);
            if n <= 0.0 {
                break;
            }
            self.add(s, s + n);
            got += n;
        }
        got
    }

    fn done(&self) -> bool {
        self.gaps(0.0, self.size).is_empty()
    }

    fn as_range_set(&self) -> RangeSet {
        let mut r = RangeSet::new();
        for &(s, e) in &self.pieces {
            r.insert(s, e);
        }
        r
    }
}

pub fn simulate_stepped(
    realized: &RouteProfile,
    nominal: &RouteProfile,
    task: &TransferTask,
    policy: Policy,
    errors: &ErrorSpec,
    dt: f64,
) -> Result<OracleOutcome> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    policy.check(task.class)?;
    if !realized.same_structure(nominal) {
        return Err(Error::RouteMismatch);
    }
    let mut rx = Received {
        size: task.size_mb,
        pieces: Vec::new(),
    };
    let mut out = OracleOutcome {
        mobile_mb: 0.0,
        wifi_local_mb: 0.0,
        wifi_backhaul_mb: 0.0,
        completion_time: None,
    };

    let decide = |rx: &Received,
                  event: Event,
                  nominal_now: f64,
                  now: f64,
                  cache: Option<&CachePlan>,
                  rates: (f64, f64)|
     -> Result<Decision> {
        let received = rx.as_range_set();
        let state = PlanningState {
            task,
            nominal,
            errors,
            nominal_now,
            now,
            received: &received,
            cache,
            local_rate: rates.0,
            backhaul_rate: rates.1,
        };
        policy_dispatch(policy, event, &state)
    };
    let exit_plan = |d: Decision| -> ExitPlan {
        match d {
            Decision::Mobile(p) => p,
            Decision::WiFi(_) => unreachable!("exit events always plan mobile use"),
        }
    };

    let mut plan = exit_plan(decide(&rx, Event::RouteStart, 0.0, 0.0, None, (0.0, 0.0))?);

    'segments: for (i, seg) in realized.segments().iter().enumerate() {
        let mut t = seg.start;
        let end = seg.end();
        match seg.access {
            Access::Mobile { rate } => {
                let r = if plan.transfer.saturate { rate } else { plan.transfer.mobile_rate.min(rate) };
                while t < end - EPS {
                    let step = dt.min(end - t);
                    out.mobile_mb += rx.take(0.0, task.size_mb, r * step / 8.0);
                    t += step;
                    if rx.done() {
                        out.completion_time = Some(t);
                        break 'segments;
                    }
                }
            }
            Access::WiFi { local_rate, backhaul_rate } => {
                let cache = plan.cache.filter(|c| Some(c.hotspot) == seg.hotspot);
                let nominal_seg = &nominal.segments()[i];
                let d = decide(
                    &rx,
                    Event::HotspotEnter,
                    nominal_seg.start,
                    seg.start,
                    cache.as_ref(),
                    (local_rate, backhaul_rate),
                )?;
                match d {
                    Decision::Mobile(p) => {
                        let rate = realized.mobile_rate_during(i);
                        let r = if p.transfer.saturate { rate } else { p.transfer.mobile_rate.min(rate) };
                        while t < end - EPS {
                            let step = dt.min(end - t);
                            out.mobile_mb += rx.take(0.0, task.size_mb, r * step / 8.0);
                            t += step;
                            if rx.done() {
                                out.completion_time = Some(t);
                                break 'segments;
                            }
                        }
                    }
                    Decision::WiFi(actions) => {
                        let mut idx = 0;
                        while t < end - EPS {
                            let step = dt.min(end - t);
                            let mut budget = step;
                            while budget > EPS && idx < actions.len() {
                                let a = actions[idx];
                                if a.rate <= 0.0 {
                                    idx += 1;
                                    continue;
                                }
                                let want = a.rate * budget / 8.0;
                                let got = rx.take(a.start_mb, a.end_mb, want);
                                match a.source {
                                    Source::Origin => out.wifi_backhaul_mb += got,
                                    Source::LocalCache => out.wifi_local_mb += got,
                                }
                                budget -= got * 8.0 / a.rate;
                                if got < want - EPS {
                                    idx += 1;
                                }
                            }
                            t += step;
                            if rx.done() {
                                out.completion_time = Some(t);
                                break 'segments;
                            }
                        }
                    }
                }
                plan = exit_plan(decide(&rx, Event::HotspotExit, nominal_seg.end(), end, None, (0.0, 0.0))?);
            }
        }
    }
    Ok(out)
}

/// Largest deviations between the engine and the oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    /// Worst channel byte difference over the object size.
    pub bytes_rel: f64,
    /// Completion time difference in seconds; infinite if only one completed.
    pub time_s: f64,
}

impl Deviation {
    pub fn within_tolerance(&self) -> bool {
        self.bytes_rel <= BYTE_TOLERANCE && self.time_s <= TIME_TOLERANCE
    }

    pub fn max(self, other: Deviation) -> Deviation {
        Deviation {
            bytes_rel: self.bytes_rel.max(other.bytes_rel),
            time_s: self.time_s.max(other.time_s),
        }
    }

    pub const ZERO: Deviation = Deviation {
        bytes_rel: 0.0,
        time_s: 0.0,
    };
}

pub fn compare(engine: &RunOutcome, oracle: &OracleOutcome, object_mb: f64) -> Deviation {
    let bytes = [
        (engine.mobile_mb, oracle.mobile_mb),
        (engine.wifi_local_mb, oracle.wifi_local_mb),
        (engine.wifi_backhaul_mb, oracle.wifi_backhaul_mb),
    ]
    .iter()
    .map(|(a, b)| (a - b).abs() / object_mb)
    .fold(0.0, f64::max);
    let time_s = match (engine.completion_time, oracle.completion_time) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    Deviation {
        bytes_rel: bytes,
        time_s,
    }
}
