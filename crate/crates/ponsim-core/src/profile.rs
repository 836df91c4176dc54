//! Per-standard channel profiles: line rate, guard time, control message
//! sizes and framing discipline.

use std::fmt;
use std::str::FromStr;

use crate::time::{transmission_time, SimTime};

/// The four standardized PON variants covered by the toolkit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Standard {
    Epon1G,
    Epon10G,
    Gpon1G,
    Gpon10G,
}

impl Standard {
    pub const ALL: [Standard; 4] = [
        Standard::Epon1G,
        Standard::Epon10G,
        Standard::Gpon1G,
        Standard::Gpon10G,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Standard::Epon1G => "epon-1g",
            Standard::Epon10G => "epon-10g",
            Standard::Gpon1G => "gpon-1g",
            Standard::Gpon10G => "gpon-10g",
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Standard {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epon-1g" => Ok(Standard::Epon1G),
            "epon-10g" => Ok(Standard::Epon10G),
            "gpon-1g" => Ok(Standard::Gpon1G),
            "gpon-10g" => Ok(Standard::Gpon10G),
            other => Err(format!(
                "unknown standard '{other}' (expected epon-1g|epon-10g|gpon-1g|gpon-10g)"
            )),
        }
    }
}

/// Upstream framing discipline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Framing {
    /// EPON: bursts triggered directly by gate messages.
    EponBurst,
    /// GPON: downstream control (bandwidth map) is emitted on a fixed frame
    /// period, and payload may be fragmented at byte granularity.
    GponFrame { period: SimTime },
}

/// Channel-level constants shared by every module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PonProfile {
    pub standard: Standard,
    /// Upstream channel rate in bits per second.
    pub rate_bps: u64,
    /// Minimum spacing between successive burst arrivals at the OLT.
    pub guard: SimTime,
    /// Transmission time of one report message.
    pub report_time: SimTime,
    /// Transmission time of one grant message on the downstream channel.
    pub gate_time: SimTime,
    pub framing: Framing,
    pub report_payload_bytes: u64,
}

pub const GPON_FRAME_PERIOD: SimTime = SimTime::from_us(125);
pub const EPON_REPORT_BYTES: u64 = 64;
pub const GPON_DBRU_BYTES: u64 = 4;
pub const EPON_GATE_BYTES: u64 = 64;

impl PonProfile {
    pub fn for_standard(standard: Standard) -> PonProfile {
        let rate_bps = match standard {
            Standard::Epon1G | Standard::Gpon1G => 1_000_000_000,
            Standard::Epon10G | Standard::Gpon10G => 10_000_000_000,
        };
        match standard {
            Standard::Epon1G | Standard::Epon10G => PonProfile {
                standard,
                rate_bps,
                guard: SimTime::from_us(1),
                report_time: transmission_time(EPON_REPORT_BYTES, rate_bps).unwrap(),
                // MPCP GATE, serialized on the dedicated downstream channel.
                gate_time: transmission_time(EPON_GATE_BYTES, rate_bps).unwrap(),
                framing: Framing::EponBurst,
                report_payload_bytes: EPON_REPORT_BYTES,
            },
            Standard::Gpon1G | Standard::Gpon10G => PonProfile {
                standard,
                rate_bps,
                guard: SimTime::from_ns(30),
                report_time: transmission_time(GPON_DBRU_BYTES, rate_bps).unwrap(),
                // The bandwidth map rides in the downstream frame header.
                gate_time: SimTime::ZERO,
                framing: Framing::GponFrame {
                    period: GPON_FRAME_PERIOD,
                },
                report_payload_bytes: GPON_DBRU_BYTES,
            },
        }
    }

    pub fn is_gpon(&self) -> bool {
        matches!(self.framing, Framing::GponFrame { .. })
    }

    /// Serialization time of a payload of `bytes` on the upstream channel.
    pub fn tx_time(&self, bytes: u64) -> SimTime {
        transmission_time(bytes, self.rate_bps).unwrap()
    }

    /// Whole ticks per payload byte; exact for the supported rates.
    pub fn ticks_per_byte(&self) -> u64 {
        8 * crate::time::TICKS_PER_SEC / self.rate_bps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epon_report_and_guard_times() {
        let p = PonProfile::for_standard(Standard::Epon1G);
        assert_eq!(p.report_time, SimTime::from_ns(512));
        assert_eq!(p.guard, SimTime::from_us(1));
        let p10 = PonProfile::for_standard(Standard::Epon10G);
        assert_eq!(p10.report_time, SimTime::from_ps(51_200));
    }

    #[test]
    fn gpon_dbru_and_guard_times() {
        let p = PonProfile::for_standard(Standard::Gpon1G);
        assert_eq!(p.report_time, SimTime::from_ns(32));
        assert_eq!(p.guard, SimTime::from_ns(30));
        assert_eq!(p.gate_time, SimTime::ZERO);
        assert_eq!(
            p.framing,
            Framing::GponFrame {
                period: SimTime::from_us(125)
            }
        );
    }

    #[test]
    fn ticks_per_byte_exact() {
        assert_eq!(PonProfile::for_standard(Standard::Epon1G).ticks_per_byte(), 8_000);
        assert_eq!(PonProfile::for_standard(Standard::Epon10G).ticks_per_byte(), 800);
    }
}
