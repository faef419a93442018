#![allow(dead_code)]

use offload_core::config::bundled_route;
use offload_core::engine::trace_trip;
use offload_core::prediction::build_prediction;
use offload_core::ranges::RangeSet;
use offload_core::schedulers::{policy_dispatch, Decision, Event, PlanningState};
use offload_core::{engine, realize_route, run_trip, Access, EnergyModel, ErrorSpec, Policy, RateFactors, RouteProfile, TrafficClass, TransferTask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A route, task and policy to check a property on.
#[derive(Clone, Debug)]
pub struct Case {
    pub label: String,
    pub route: RouteProfile,
    pub task: TransferTask,
    pub policy: Policy,
}

pub fn random_route(rng: &mut ChaCha8Rng) -> RouteProfile {
    let n = rng.random_range(2..=6);
    let parts: Vec<(f64, Access)> = (0..n)
        .map(|_| {
            let duration = rng.random_range(5.0..60.0);
            let access = if rng.random_bool(0.5) {
                Access::Mobile { rate: rng.random_range(0.3..3.0) }
            } else {
                let local_rate = rng.random_range(1.0..8.0);
                Access::WiFi {
                    local_rate,
                    backhaul_rate: rng.random_range(0.2..=local_rate),
                }
            };
            (duration, access)
        })
        .collect();
    RouteProfile::from_durations(parts).unwrap()
}

/// 1000 random small routes, each with a random task and every admitted policy.
pub fn random_cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut cases = Vec::new();
    for i in 0..1000 {
        let route = random_route(&mut rng);
        let size = rng.random_range(0.5..40.0);
        let task = if rng.random_bool(0.5) {
            TransferTask::delay_tolerant(size, route.total_time()).unwrap()
        } else {
            TransferTask::delay_sensitive(size).unwrap()
        };
        for p in Policy::ALL.into_iter().filter(|p| p.admits(task.class)) {
            cases.push(Case {
                label: format!("random#{i} {} {size:.2}MB", p.name()),
                route: route.clone(),
                task,
                policy: p,
            });
        }
    }
    cases
}

/// Bundled layouts at the baseline scaling, each with both baseline tasks.
pub fn bundled_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    for name in offload_core::config::BUNDLED_ROUTES {
        let route = bundled_route(name).unwrap().scaled(RateFactors::default()).unwrap();
        for task in [
            TransferTask::delay_tolerant(60.0, route.total_time()).unwrap(),
            TransferTask::delay_sensitive(50.0).unwrap(),
        ] {
            for p in Policy::ALL.into_iter().filter(|p| p.admits(task.class)) {
                cases.push(Case {
                    label: format!("{name} {} {}", task.class, p.name()),
                    route: route.clone(),
                    task,
                    policy: p,
                });
            }
        }
    }
    cases
}

pub fn all_cases() -> Vec<Case> {
    let mut c = bundled_cases();
    c.extend(random_cases());
    c
}

fn trace(c: &Case, route: &RouteProfile, task: &TransferTask) -> engine::TripTrace {
    trace_trip(route, route, task, c.policy, &ErrorSpec::zero(), &EnergyModel::default()).unwrap()
}

pub fn check_conservation(c: &Case) -> Result<(), String> {
    let t = trace(c, &c.route, &c.task);
    let received = t.state.received.total();
    let channels = t.state.channel_total();
    if (received - channels).abs() > 1e-6 {
        return Err(format!("{}: received {received} vs channels {channels}", c.label));
    }
    if received > c.task.size_mb + 1e-6 {
        return Err(format!("{}: received {received} exceeds object", c.label));
    }
    if t.outcome.completed && (received - c.task.size_mb).abs() > 1e-6 {
        return Err(format!("{}: complete with {received} of {}", c.label, c.task.size_mb));
    }
    Ok(())
}

fn planning_state<'a>(c: &'a Case, received: &'a RangeSet, errors: &'a ErrorSpec, now: f64) -> PlanningState<'a> {
    PlanningState {
        task: &c.task,
        nominal: &c.route,
        errors,
        nominal_now: now,
        now,
        received,
        cache: None,
        local_rate: 0.0,
        backhaul_rate: 0.0,
    }
}

/// Planning twice from the same state gives the same plan.
pub fn check_plan_idempotence(c: &Case) -> Result<(), String> {
    let errors = ErrorSpec::default();
    let mut received = RangeSet::new();
    for frac in [0.0, 0.3] {
        received.insert(0.0, c.task.size_mb * frac);
        for seg in c.route.segments().iter().filter(|s| s.hotspot.is_some()) {
            let state = planning_state(c, &received, &errors, seg.end());
            let a = policy_dispatch(c.policy, Event::HotspotExit, &state).unwrap();
            let b = policy_dispatch(c.policy, Event::HotspotExit, &state).unwrap();
            if a != b {
                return Err(format!("{}: {a:?} vs {b:?}", c.label));
            }
        }
    }
    Ok(())
}

/// Delay-tolerant policies meet the deadline at zero error unless a plan
/// reported it unreachable.
pub fn check_zero_error_deadline(c: &Case) -> Result<(), String> {
    if c.task.class != TrafficClass::DelayTolerant
        || !matches!(c.policy, Policy::PrefetchDelayTolerant | Policy::PredictionOnlyDelayTolerant)
    {
        return Ok(());
    }
    let out = trace(c, &c.route, &c.task).outcome;
    if !out.plan_infeasible && !out.deadline_met {
        return Err(format!("{}: feasible plan but delay {}", c.label, out.transfer_delay));
    }
    Ok(())
}

/// `offset - prefix = R_mobile * time_to_next_wifi / 8` for every prefetch plan.
pub fn check_offset_identity(c: &Case) -> Result<(), String> {
    if !c.policy.prefetches() {
        return Ok(());
    }
    let errors = ErrorSpec::default();
    let mut received = RangeSet::new();
    received.insert(0.0, c.task.size_mb * 0.2);
    let mut times = vec![0.0];
    times.extend(c.route.segments().iter().filter(|s| s.hotspot.is_some()).map(|s| s.end()));
    for now in times {
        let state = planning_state(c, &received, &errors, now);
        let event = if now == 0.0 { Event::RouteStart } else { Event::HotspotExit };
        let Decision::Mobile(plan) = policy_dispatch(c.policy, event, &state).unwrap() else {
            return Err(format!("{}: exit produced entry actions", c.label));
        };
        let Some(cache) = plan.cache else { continue };
        let pred = build_prediction(&c.route, now, &errors, true);
        let expected = plan.transfer.mobile_rate * pred.time_to_next_wifi / 8.0;
        let got = cache.offset_mb - received.prefix();
        if (got - expected).abs() > 1e-9 * (1.0 + expected) {
            return Err(format!("{} at {now}: offset advance {got} vs {expected}", c.label));
        }
    }
    Ok(())
}

/// Larger objects never raise the offloaded share.
pub fn check_monotone_in_size(c: &Case) -> Result<(), String> {
    if !matches!(
        c.policy,
        Policy::PrefetchDelayTolerant | Policy::PredictionOnlyDelayTolerant | Policy::MobileOnly
    ) {
        return Ok(());
    }
    let mut last = f64::INFINITY;
    for f in [0.5, 1.0, 1.5, 2.5] {
        let task = TransferTask::new(c.task.size_mb * f, c.task.delay_threshold, c.task.class).unwrap();
        let off = trace(c, &c.route, &task).outcome.offload_pct;
        if off > last + 1e-6 {
            return Err(format!("{}: offload rose to {off} from {last} at size x{f}", c.label));
        }
        last = off;
    }
    Ok(())
}

/// Faster local WiFi never lowers the prefetch policy's offloaded share.
pub fn check_monotone_in_wifi_rate(c: &Case) -> Result<(), String> {
    if c.policy != Policy::PrefetchDelayTolerant {
        return Ok(());
    }
    let mut last = -1.0;
    for f in [1.0, 1.5, 3.0] {
        let faster = RouteProfile::new(
            c.route
                .segments()
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    if let Access::WiFi { local_rate, backhaul_rate } = s.access {
                        s.access = Access::WiFi { local_rate: local_rate * f, backhaul_rate };
                    }
                    s
                })
                .collect(),
        )
        .unwrap();
        let off = trace(c, &faster, &c.task).outcome.offload_pct;
        if off < last - 1e-6 {
            return Err(format!("{}: offload fell to {off} from {last} at WiFi x{f}", c.label));
        }
        last = off;
    }
    Ok(())
}

/// Same inputs and seed give bit-identical outcomes.
pub fn check_determinism(c: &Case) -> Result<(), String> {
    let errors = ErrorSpec::new(0.3, 0.4, 99).unwrap();
    let realized = realize_route(&c.route, &errors);
    let again = realize_route(&c.route, &errors);
    if realized != again {
        return Err(format!("{}: realization differs", c.label));
    }
    let e = EnergyModel::default();
    let a = run_trip(&realized, &c.route, &c.task, c.policy, &errors, &e).unwrap();
    let b = run_trip(&again, &c.route, &c.task, c.policy, &errors, &e).unwrap();
    if a != b {
        return Err(format!("{}: {a:?} vs {b:?}", c.label));
    }
    Ok(())
}

pub type Check = fn(&Case) -> Result<(), String>;

pub const PROPERTIES: [(&str, Check); 7] = [
    ("conservation", check_conservation),
    ("plan idempotence", check_plan_idempotence),
    ("zero-error deadline", check_zero_error_deadline),
    ("offset identity", check_offset_identity),
    ("monotone in size", check_monotone_in_size),
    ("monotone in WiFi rate", check_monotone_in_wifi_rate),
    ("determinism", check_determinism),
];

/// Runs `check` on every case and returns the first few failures.
pub fn failures(cases: &[Case], check: Check) -> Vec<String> {
    cases.iter().filter_map(|c| check(c).err()).take(5).collect()
}
