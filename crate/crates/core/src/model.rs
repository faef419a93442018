//! Routes, transfer tasks, the SNR throughput mapping and the energy model.
//!
//! Units throughout the crate: sizes in MB (10^6 bytes), rates in Mbit/s,
//! times in seconds. A route is a pre-segmented timeline of mobile-only and
//! WiFi-hotspot windows; it carries no geometry.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that segment boundaries line up.
const CONTIGUITY_TOL: f64 = 1e-9;

pub fn mb_to_mbit(mb: f64) -> f64 {
    mb * 8.0
}

pub fn mbit_to_mb(mbit: f64) -> f64 {
    mbit / 8.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Mobile,
    #[serde(rename = "wifi")]
    WiFi,
}

/// Access technology of a segment together with its nominal rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Access {
    Mobile { rate: f64 },
    /// `local_rate` serves the hotspot cache, `backhaul_rate` is the
    /// ADSL path to the object's origin.
    WiFi { local_rate: f64, backhaul_rate: f64 },
}

impl Access {
    pub fn kind(&self) -> AccessKind {
        match self {
            Access::Mobile { .. } => AccessKind::Mobile,
            Access::WiFi { .. } => AccessKind::WiFi,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteSegment {
    pub start: f64,
    pub duration: f64,
    pub access: Access,
    /// Ordinal of the hotspot along the route, WiFi segments only.
    pub hotspot: Option<usize>,
}

impl RouteSegment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn kind(&self) -> AccessKind {
        self.access.kind()
    }

    pub fn mobile_rate(&self) -> Option<f64> {
        match self.access {
            Access::Mobile { rate } => Some(rate),
            Access::WiFi { .. } => None,
        }
    }

    pub fn wifi_rates(&self) -> Option<(f64, f64)> {
        match self.access {
            Access::WiFi {
                local_rate,
                backhaul_rate,
            } => Some((local_rate, backhaul_rate)),
            Access::Mobile { .. } => None,
        }
    }
}

/// Ordered, contiguous connectivity timeline. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteProfile {
    segments: Vec<RouteSegment>,
    total_time: f64,
}

impl RouteProfile {
    /// Builds a route starting at t = 0 from `(duration, access)` pairs.
    pub fn from_durations(parts: impl IntoIterator<Item = (f64, Access)>) -> Result<Self> {
        let mut start = 0.0;
        let mut segments = Vec::new();
        for (duration, access) in parts {
            segments.push(RouteSegment {
                start,
                duration,
                access,
                hotspot: None,
            });
            start += duration;
        }
        Self::new(segments)
    }

    /// Validates segments and assigns hotspot ordinals in route order.
    pub fn new(mut segments: Vec<RouteSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidRoute("route has no segments".into()));
        }
        let mut expected_start = segments[0].start;
        if expected_start.abs() > CONTIGUITY_TOL {
            return Err(Error::InvalidRoute(format!(
                "first segment starts at {expected_start} s, expected 0"
            )));
        }
        let mut hotspot = 0;
        for (i, seg) in segments.iter_mut().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::InvalidRoute(format!(
                    "segment {i}: duration must be positive, got {}",
                    seg.duration
                )));
            }
            if (seg.start - expected_start).abs() > CONTIGUITY_TOL {
                return Err(Error::InvalidRoute(format!(
                    "segment {i}: starts at {} s but previous segment ends at {expected_start} s",
                    seg.start
                )));
            }
            let rates_ok = match seg.access {
                Access::Mobile { rate } => rate.is_finite() && rate > 0.0,
                Access::WiFi {
                    local_rate,
                    backhaul_rate,
                } => {
                    local_rate.is_finite()
                        && local_rate > 0.0
                        && backhaul_rate.is_finite()
                        && backhaul_rate > 0.0
                }
            };
            if !rates_ok {
                return Err(Error::InvalidRoute(format!(
                    "segment {i}: rates must be positive"
                )));
            }
            seg.hotspot = match seg.access {
                Access::WiFi { .. } => {
                    hotspot += 1;
                    Some(hotspot - 1)
                }
                Access::Mobile { .. } => None,
            };
            expected_start = seg.end();
        }
        Ok(Self {
            segments,
            total_time: expected_start,
        })
    }

    pub fn segments(&self) -> &[RouteSegment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn hotspot_count(&self) -> usize {
        self.segments.iter().filter(|s| s.hotspot.is_some()).count()
    }

    /// Mobile rate available while in segment `index`. Inside a WiFi window
    /// this is the rate of the preceding mobile segment (the following one
    /// if none precedes, 0 if the route has no mobile segment at all).
    pub fn mobile_rate_during(&self, index: usize) -> f64 {
        let before = self.segments[..=index]
            .iter()
            .rev()
            .find_map(RouteSegment::mobile_rate);
        before
            .or_else(|| self.segments[index..].iter().find_map(RouteSegment::mobile_rate))
            .unwrap_or(0.0)
    }

    /// True when both routes have the same number and kinds of segments.
    pub fn same_structure(&self, other: &RouteProfile) -> bool {
        self.segments.len() == other.segments.len()
            && self
                .segments
                .iter()
                .zip(&other.segments)
                .all(|(a, b)| a.kind() == b.kind())
    }

    /// Multiplies every mobile, local WiFi and backhaul rate by its factor.
    /// Times are unchanged.
    pub fn scaled(&self, factors: RateFactors) -> Result<Self> {
        scale_route(self, factors.mobile, factors.wifi, factors.backhaul)
    }
}

pub fn scale_route(
    route: &RouteProfile,
    mobile_factor: f64,
    wifi_factor: f64,
    backhaul_factor: f64,
) -> Result<RouteProfile> {
    for (field, f) in [
        ("mobile_factor", mobile_factor),
        ("wifi_factor", wifi_factor),
        ("backhaul_factor", backhaul_factor),
    ] {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::param(field, format!("must be positive, got {f}")));
        }
    }
    let segments = route
        .segments
        .iter()
        .map(|s| RouteSegment {
            access: match s.access {
                Access::Mobile { rate } => Access::Mobile {
                    rate: rate * mobile_factor,
                },
                Access::WiFi {
                    local_rate,
                    backhaul_rate,
                } => Access::WiFi {
                    local_rate: local_rate * wifi_factor,
                    backhaul_rate: backhaul_rate * backhaul_factor,
                },
            },
            ..s.clone()
        })
        .collect();
    Ok(RouteProfile {
        segments,
        total_time: route.total_time,
    })
}

/// Per-technology rate multipliers (the M/k, W/k, A/k grid).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFactors {
    pub mobile: f64,
    pub wifi: f64,
    pub backhaul: f64,
}

impl RateFactors {
    pub const UNIT: RateFactors = RateFactors {
        mobile: 1.0,
        wifi: 1.0,
        backhaul: 1.0,
    };

    pub fn uniform(f: f64) -> Self {
        Self {
            mobile: f,
            wifi: f,
            backhaul: f,
        }
    }
}

impl Default for RateFactors {
    fn default() -> Self {
        Self::uniform(1.0 / 3.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficClass {
    DelayTolerant,
    DelaySensitive,
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficClass::DelayTolerant => "delay-tolerant",
            TrafficClass::DelaySensitive => "delay-sensitive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferTask {
    pub size_mb: f64,
    /// Deadline in seconds from route start. Ignored for delay-sensitive traffic.
    pub delay_threshold: f64,
    pub class: TrafficClass,
}

impl TransferTask {
    pub fn new(size_mb: f64, delay_threshold: f64, class: TrafficClass) -> Result<Self> {
        if !(size_mb.is_finite() && size_mb > 0.0) {
            return Err(Error::param("size_mb", format!("must be positive, got {size_mb}")));
        }
        if !(delay_threshold > 0.0) {
            return Err(Error::param(
                "delay_threshold",
                format!("must be positive, got {delay_threshold}"),
            ));
        }
        Ok(Self {
            size_mb,
            delay_threshold,
            class,
        })
    }

    pub fn delay_tolerant(size_mb: f64, delay_threshold: f64) -> Result<Self> {
        Self::new(size_mb, delay_threshold, TrafficClass::DelayTolerant)
    }

    pub fn delay_sensitive(size_mb: f64) -> Result<Self> {
        Self::new(size_mb, f64::INFINITY, TrafficClass::DelaySensitive)
    }

    /// Deadline as seen by planners: infinite for delay-sensitive traffic.
    pub fn effective_deadline(&self) -> f64 {
        match self.class {
            TrafficClass::DelayTolerant => self.delay_threshold,
            TrafficClass::DelaySensitive => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub mobile_transfer_j_per_mb: f64,
    pub wifi_transfer_j_per_mb: f64,
    pub wifi_idle_w: f64,
    /// The WiFi interface is switched on this long before each hotspot.
    pub wifi_preactivation_s: f64,
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("mobile_transfer_j_per_mb", self.mobile_transfer_j_per_mb),
            ("wifi_transfer_j_per_mb", self.wifi_transfer_j_per_mb),
            ("wifi_idle_w", self.wifi_idle_w),
            ("wifi_preactivation_s", self.wifi_preactivation_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(field, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            mobile_transfer_j_per_mb: 100.0,
            wifi_transfer_j_per_mb: 5.0,
            wifi_idle_w: 0.77,
            wifi_preactivation_s: 20.0,
        }
    }
}

/// One row of the SNR mapping, covering `(lower_db, upper_db]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrBand {
    pub lower_db: Option<f64>,
    pub upper_db: Option<f64>,
    pub wifi_rate: f64,
    pub adsl_rate: f64,
}

impl SnrBand {
    fn contains(&self, snr_db: f64) -> bool {
        self.lower_db.is_none_or(|lo| snr_db > lo) && self.upper_db.is_none_or(|hi| snr_db <= hi)
    }
}

/// Bands sorted by ascending SNR that partition the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrTable {
    bands: Vec<SnrBand>,
}

impl SnrTable {
    pub fn new(mut bands: Vec<SnrBand>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSnrTable(msg));
        if bands.is_empty() {
            return bad("no bands".into());
        }
        bands.sort_by(|a, b| {
            let key = |x: &SnrBand| x.lower_db.unwrap_or(f64::NEG_INFINITY);
            key(a).total_cmp(&key(b))
        });
        if bands[0].lower_db.is_some() {
            return bad("lowest band must be open below".into());
        }
        if bands[bands.len() - 1].upper_db.is_some() {
            return bad("highest band must be open above".into());
        }
        for pair in bands.windows(2) {
            if pair[0].upper_db != pair[1].lower_db {
                return bad(format!(
                    "bands do not meet: upper {:?} vs next lower {:?}",
                    pair[0].upper_db, pair[1].lower_db
                ));
            }
        }
        for b in &bands {
            if let (Some(lo), Some(hi)) = (b.lower_db, b.upper_db) {
                if lo >= hi {
                    return bad(format!("empty band ({lo}, {hi}]"));
                }
            }
            if !(b.wifi_rate > 0.0 && b.adsl_rate > 0.0) {
                return bad("rates must be positive".into());
            }
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[SnrBand] {
        &self.bands
    }

    pub fn lookup(&self, snr_db: f64) -> (f64, f64) {
        let band = self
            .bands
            .iter()
            .find(|b| b.contains(snr_db))
            // NaN matches nothing; treat as the weakest signal.
            .unwrap_or(&self.bands[0]);
        (band.wifi_rate, band.adsl_rate)
    }
}

/// Maps an SNR reading to `(wifi_rate, adsl_rate)` in Mbit/s.
pub fn snr_to_throughput(snr_db: f64, table: &SnrTable) -> (f64, f64) {
    table.lookup(snr_db)
}
