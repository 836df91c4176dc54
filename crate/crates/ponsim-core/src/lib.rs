//! Discrete-event simulator and analytical toolkit for upstream dynamic
//! bandwidth allocation in EPON/GPON access networks, focused on how the
//! position of the queue-report message inside a granted burst (end,
//! beginning, or per-slot optimized) changes channel idle time and packet
//! delay.

pub mod dba;
#[cfg(not(target_arch = "wasm32"))]
pub mod experiment;
pub mod idle;
pub mod kernel;
pub mod metrics;
pub mod profile;
pub mod record;
pub mod time;
pub mod topology;
pub mod traffic;

pub use dba::{DbaPolicy, Framework, Reporting, Sizing};
pub use idle::{arrival_instant, delta_idle, idle_time, DeltaCase, IdleInputs};
pub use kernel::{run, RunConfig, RunError, RunOutput};
pub use metrics::RunSummary;
pub use profile::{PonProfile, Standard};
pub use record::{Packet, TransmissionRecord};
pub use time::SimTime;
pub use topology::{RangeProfile, Topology};
pub use traffic::TrafficConfig;
