//! Planner-visible predictions and realized (perturbed) routes.
//!
//! Planners see the nominal route together with the error magnitudes and
//! work with min/max bounds. The engine runs on a realization drawn from
//! the same error magnitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Access, AccessKind, RouteProfile, RouteSegment};

/// Slack for "is this segment still ahead of `now`" comparisons.
const TIME_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSpec {
    /// Half-width of the duration interval, as a fraction of nominal.
    pub time_error: f64,
    /// Half-width of the rate interval, as a fraction of nominal.
    pub throughput_error: f64,
    pub seed: u64,
}

impl ErrorSpec {
    pub fn new(time_error: f64, throughput_error: f64, seed: u64) -> Result<Self> {
        for (field, e) in [
            ("time_error", time_error),
            ("throughput_error", throughput_error),
        ] {
            if !(0.0..1.0).contains(&e) {
                return Err(Error::param(field, format!("must lie in [0, 1), got {e}")));
            }
        }
        Ok(Self {
            time_error,
            throughput_error,
            seed,
        })
    }

    pub fn zero() -> Self {
        Self {
            time_error: 0.0,
            throughput_error: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl Default for ErrorSpec {
    fn default() -> Self {
        Self {
            time_error: 0.10,
            throughput_error: 0.20,
            seed: 0,
        }
    }
}

/// Bounds for one upcoming hotspot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HotspotEstimate {
    pub hotspot: usize,
    /// Nominal seconds from `now` until the hotspot is entered.
    pub starts_in: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Bounds on the rate the planner counts on: the local (cache) rate for
    /// prefetching schemes, the backhaul rate otherwise.
    pub r_min: f64,
    pub r_max: f64,
    pub backhaul_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionProfile {
    pub hotspots: Vec<HotspotEstimate>,
    pub time_to_next_wifi: f64,
    pub remaining_mobile_time: f64,
    /// Nominal rate of the mobile segment the node is in or enters next.
    pub max_mobile_rate: f64,
    /// `(seconds, rate)` of the remaining nominal mobile time, in order.
    pub mobile_pieces: Vec<(f64, f64)>,
}

impl PredictionProfile {
    pub fn n_wifi(&self) -> usize {
        self.hotspots.len()
    }

    pub fn next_hotspot(&self) -> Option<&HotspotEstimate> {
        self.hotspots.first()
    }
}

/// Prediction of the rest of `route` as seen from nominal time `now`.
///
/// A hotspot counts as upcoming when its nominal start is at or after
/// `now`; a window the node is already inside is not included.
pub fn build_prediction(
    route: &RouteProfile,
    now: f64,
    errors: &ErrorSpec,
    use_local_rate: bool,
) -> PredictionProfile {
    let te = errors.time_error;
    let re = errors.throughput_error;
    let ahead = |s: &RouteSegment| s.start >= now - TIME_TOL;

    let hotspots: Vec<HotspotEstimate> = route
        .segments()
        .iter()
        .filter(|s| ahead(s))
        .filter_map(|s| {
            let (local, backhaul) = s.wifi_rates()?;
            let rate = if use_local_rate { local } else { backhaul };
            Some(HotspotEstimate {
                hotspot: s.hotspot.expect("wifi segment carries a hotspot index"),
                starts_in: (s.start - now).max(0.0),
                t_min: (1.0 - te) * s.duration,
                t_max: (1.0 + te) * s.duration,
                r_min: (1.0 - re) * rate,
                r_max: (1.0 + re) * rate,
                backhaul_min: (1.0 - re) * backhaul,
            })
        })
        .collect();

    let time_to_next_wifi = hotspots.first().map_or(0.0, |h| h.starts_in);

    let upcoming_mobile = route
        .segments()
        .iter()
        .filter(|s| s.kind() == AccessKind::Mobile && s.end() > now + TIME_TOL);
    let mut remaining_mobile_time = 0.0;
    let mut max_mobile_rate = None;
    let mut mobile_pieces = Vec::new();
    for s in upcoming_mobile {
        let rate = s.mobile_rate().unwrap_or(0.0);
        let secs = s.end() - s.start.max(now);
        remaining_mobile_time += secs;
        max_mobile_rate.get_or_insert(rate);
        mobile_pieces.push((secs, rate));
    }

    PredictionProfile {
        hotspots,
        time_to_next_wifi,
        remaining_mobile_time,
        max_mobile_rate: max_mobile_rate.unwrap_or(0.0),
        mobile_pieces,
    }
}

/// Draws a realized route: every duration and rate independently uniform
/// on `[(1 - e) x, (1 + e) x]`, start times recomputed cumulatively.
///
/// Each segment consumes exactly three draws whatever its kind and
/// whatever the error magnitudes, so one seed yields the same underlying
/// noise across error levels.
pub fn realize_route(route: &RouteProfile, errors: &ErrorSpec) -> RouteProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(errors.seed);
    let te = errors.time_error;
    let re = errors.throughput_error;
    let parts: Vec<(f64, Access)> = route
        .segments()
        .iter()
        .map(|s| {
            let u_time: f64 = rng.random_range(-1.0..=1.0);
            let u_rate: f64 = rng.random_range(-1.0..=1.0);
            let u_backhaul: f64 = rng.random_range(-1.0..=1.0);
            let duration = s.duration * (1.0 + te * u_time);
            let access = match s.access {
                Access::Mobile { rate } => Access::Mobile {
                    rate: rate * (1.0 + re * u_rate),
                },
                Access::WiFi {
                    local_rate,
                    backhaul_rate,
                } => Access::WiFi {
                    local_rate: local_rate * (1.0 + re * u_rate),
                    backhaul_rate: backhaul_rate * (1.0 + re * u_backhaul),
                },
            };
            (duration, access)
        })
        .collect();
    RouteProfile::from_durations(parts).expect("perturbation keeps durations and rates positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::bundled_route;
    use crate::model::RateFactors;

    fn default_route() -> RouteProfile {
        bundled_route("route_4ap").unwrap().scaled(RateFactors::default()).unwrap()
    }

    #[test]
    fn zero_error_bounds_are_nominal() {
        let route = default_route();
        let p = build_prediction(&route, 0.0, &ErrorSpec::zero(), true);
        assert_eq!(p.n_wifi(), 4);
        for (h, seg) in p.hotspots.iter().zip(route.segments().iter().filter(|s| s.hotspot.is_some())) {
            assert_eq!(h.t_min, seg.duration);
            assert_eq!(h.t_max, seg.duration);
            assert_eq!(h.r_min, seg.wifi_rates().unwrap().0);
            assert_eq!(h.r_max, h.r_min);
        }
        assert_eq!(p.time_to_next_wifi, 18.0);
        assert_eq!(p.remaining_mobile_time, 197.0);
    }

    #[test]
    fn bounds_after_first_hotspot() {
        let route = default_route();
        let errors = ErrorSpec::new(0.1, 0.2, 0).unwrap();
        let p = build_prediction(&route, 36.0, &errors, true);
        assert_eq!(p.n_wifi(), 3);
        let h = p.hotspots[0];
        assert_eq!(h.hotspot, 1);
        assert!((h.t_min - 16.2).abs() < 1e-9 && (h.t_max - 19.8).abs() < 1e-9);
        assert!((h.r_min - 4.464).abs() < 1e-9 && (h.r_max - 6.696).abs() < 1e-9);
        assert_eq!(p.time_to_next_wifi, 54.0);
        assert!((p.max_mobile_rate - 4.58 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn backhaul_bounds_for_prediction_only() {
        let route = default_route();
        let p = build_prediction(&route, 0.0, &ErrorSpec::default(), false);
        let h = p.hotspots[0];
        assert!((h.r_max - 1.2 * 6.81 / 3.0).abs() < 1e-12);
        assert_eq!(h.r_min, h.backhaul_min);
    }

    #[test]
    fn no_hotspots_left() {
        let route = default_route();
        let p = build_prediction(&route, 252.0, &ErrorSpec::default(), true);
        assert_eq!(p.n_wifi(), 0);
        assert_eq!(p.time_to_next_wifi, 0.0);
        assert_eq!(p.remaining_mobile_time, 17.0);
        let end = build_prediction(&route, 269.0, &ErrorSpec::default(), true);
        assert_eq!(end.max_mobile_rate, 0.0);
        assert_eq!(end.remaining_mobile_time, 0.0);
    }

    #[test]
    fn zero_error_realization_is_identity() {
        let route = default_route();
        let realized = realize_route(&route, &ErrorSpec::zero().with_seed(99));
        assert_eq!(realized.segments().len(), route.segments().len());
        for (a, b) in realized.segments().iter().zip(route.segments()) {
            assert_eq!(a.duration, b.duration);
            assert_eq!(a.access, b.access);
            assert!((a.start - b.start).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_route() {
        let route = default_route();
        let e = ErrorSpec::new(0.3, 0.6, 1234).unwrap();
        assert_eq!(realize_route(&route, &e), realize_route(&route, &e));
        assert_ne!(realize_route(&route, &e), realize_route(&route, &e.with_seed(1235)));
    }

    #[test]
    fn error_fraction_bounds_checked() {
        assert!(ErrorSpec::new(1.0, 0.0, 0).is_err());
        assert!(ErrorSpec::new(0.0, -0.1, 0).is_err());
    }

    #[test]
    fn realized_values_stay_in_intervals() {
        let route = default_route();
        let e = ErrorSpec::new(0.1, 0.4, 0).unwrap();
        let mut mean_first = 0.0;
        let n = 10_000;
        for seed in 0..n {
            let r = realize_route(&route, &e.with_seed(seed));
            for (a, b) in r.segments().iter().zip(route.segments()) {
                assert!(a.duration >= 0.9 * b.duration - 1e-12 && a.duration <= 1.1 * b.duration + 1e-12);
                match (a.access, b.access) {
                    (Access::Mobile { rate: x }, Access::Mobile { rate: y }) => {
                        assert!(x >= 0.6 * y - 1e-12 && x <= 1.4 * y + 1e-12)
                    }
                    (
                        Access::WiFi { local_rate: x, backhaul_rate: xb },
                        Access::WiFi { local_rate: y, backhaul_rate: yb },
                    ) => {
                        assert!(x >= 0.6 * y - 1e-12 && x <= 1.4 * y + 1e-12);
                        assert!(xb >= 0.6 * yb - 1e-12 && xb <= 1.4 * yb + 1e-12);
                    }
                    _ => panic!("kind changed"),
                }
            }
            mean_first += r.segments()[2].duration;
        }
        mean_first /= n as f64;
        assert!((mean_first - 54.0).abs() < 0.01 * 54.0, "mean {mean_first}");
    }
}
