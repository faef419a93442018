//! Vehicular WiFi offloading with mobility prediction and hotspot prefetching.
//!
//! A trip is a route of mobile and WiFi segments. Policies decide how fast
//! to use the mobile network and what to prefetch into the next hotspot's
//! cache; the engine runs them on a randomly perturbed route and reports
//! offload share, delay and energy.

pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod prediction;
pub mod ranges;
pub mod schedulers;
pub mod sweep;

pub use engine::{run_trip, trace_trip, RunOutcome};
pub use error::{Error, Result};
pub use metrics::{ci_halfwidth, relative_gain, run_scenario, AggregateResult, Metric, ScenarioSpec};
pub use model::{Access, EnergyModel, RateFactors, RouteProfile, TrafficClass, TransferTask};
pub use prediction::{build_prediction, realize_route, ErrorSpec, PredictionProfile};
pub use schedulers::Policy;
pub use sweep::{run_sweep, SweepParam, SweepSpec};
