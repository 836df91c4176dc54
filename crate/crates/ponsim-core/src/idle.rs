//! Closed-form channel idle-time analysis: arrival instants, idle times,
//! the idle-time reduction cases for reporting at the beginning versus the
//! end, and the high-load approximation and utilization-limit formulas.
//!
//! These functions double as the simulator's oracle: every kernel record
//! must satisfy them exactly at tick resolution.

use thiserror::Error;

use crate::dba::Reporting;
use crate::time::{Fraction, SimTime};

/// Instant an upstream burst starts to arrive at the OLT: no earlier than a
/// guard time after the preceding arrival ends, and no earlier than the gate
/// signaling delay after the scheduling decision.
pub fn arrival_instant(
    gamma: SimTime,
    gate_delay: SimTime,
    omega: SimTime,
    guard: SimTime,
) -> SimTime {
    (omega + guard).max(gamma + gate_delay)
}

/// Channel idle time preceding the arrival: `max(t_g, gamma + T - omega)`,
/// which equals `arrival_instant - omega`.
pub fn idle_time(gamma: SimTime, gate_delay: SimTime, omega: SimTime, guard: SimTime) -> SimTime {
    guard.max((gamma + gate_delay).saturating_sub(omega))
}

/// Inputs of the idle-reduction analysis for one burst: the scheduling
/// instants under begin/end reporting plus the shared timing context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdleInputs {
    /// Scheduling instant with reporting at the beginning.
    pub gamma_begin: SimTime,
    /// Scheduling instant with reporting at the end (>= gamma_begin).
    pub gamma_end: SimTime,
    pub gate_delay: SimTime,
    pub omega: SimTime,
    pub guard: SimTime,
}

/// Which constraint governs the idle-time reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaCase {
    /// Both scheduling instants are masked by the preceding transmission;
    /// no reduction.
    GuardMasked,
    /// Only the end-reporting instant is unmasked; the reduction is
    /// strictly between zero and the payload transmission time.
    Partial,
    /// Both instants are unmasked; the reduction equals the full gap
    /// between the scheduling instants.
    Full,
}

impl DeltaCase {
    pub fn name(self) -> &'static str {
        match self {
            DeltaCase::GuardMasked => "guard-masked",
            DeltaCase::Partial => "partial",
            DeltaCase::Full => "full",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdleError {
    #[error("gamma_end must be >= gamma_begin")]
    InvalidInputs,
}

/// Idle-time reduction from moving the report to the beginning:
/// `I_end - I_begin`, classified into the three constraint cases.
pub fn delta_idle(inputs: &IdleInputs) -> Result<(DeltaCase, SimTime), IdleError> {
    let IdleInputs {
        gamma_begin,
        gamma_end,
        gate_delay,
        omega,
        guard,
    } = *inputs;
    if gamma_end < gamma_begin {
        return Err(IdleError::InvalidInputs);
    }
    let masked_at = omega + guard;
    if gamma_end + gate_delay <= masked_at {
        Ok((DeltaCase::GuardMasked, SimTime::ZERO))
    } else if gamma_begin + gate_delay >= masked_at {
        Ok((DeltaCase::Full, gamma_end - gamma_begin))
    } else {
        Ok((DeltaCase::Partial, gamma_end + gate_delay - masked_at))
    }
}

/// High-load mean idle time per transmission for offline STP: the cycle pays
/// one unmasked round trip, reduced by the last window when reporting at the
/// beginning. Returns the estimate and an over-masking flag when the last
/// window exceeds the round trip.
pub fn approx_mean_idle_offline(
    reporting: Reporting,
    tau_max: SimTime,
    onus: u32,
    last_window: SimTime,
) -> (SimTime, bool) {
    assert!(onus >= 1);
    let round_trip = tau_max.mul(2);
    match reporting {
        Reporting::End => (round_trip.div(onus as u64), false),
        Reporting::Beginning | Reporting::Optimized => {
            if last_window > round_trip {
                (SimTime::ZERO, true)
            } else {
                ((round_trip - last_window).div(onus as u64), false)
            }
        }
    }
}

/// Saturation throughput bound of offline STP with capped grant sizing:
/// `Z / (2 tau + Z)` when reporting at the end, `(Z - G_max) / (2 tau + Z)`
/// when reporting at the beginning.
pub fn utilization_limit(
    reporting: Reporting,
    z: SimTime,
    tau_max: SimTime,
    g_max: SimTime,
) -> Fraction {
    assert!(z > SimTime::ZERO);
    let den = tau_max.mul(2) + z;
    let num = match reporting {
        Reporting::End => z,
        Reporting::Beginning | Reporting::Optimized => z.saturating_sub(g_max),
    };
    Fraction::new(num.as_ps(), den.as_ps())
}
