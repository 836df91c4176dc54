//! Packets and per-burst transmission records exchanged between modules.

use std::io::{self, Write};

use crate::time::SimTime;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub onu: u32,
    pub size_bytes: u32,
    pub t_gen: SimTime,
    pub t_delivered: Option<SimTime>,
}

/// Complete timing state of one upstream burst as observed at the OLT.
///
/// `alpha = max(omega + guard, gamma + gate_delay)` and `idle = alpha - omega`
/// hold exactly at tick resolution for every record the kernel emits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionRecord {
    /// Polling cycle index.
    pub cycle: u64,
    /// Thread index, 1-based (always 1 unless multi-thread polling).
    pub thread: u8,
    /// Position of this burst within the cycle (1-based slot index).
    pub slot: u32,
    pub onu: u32,
    /// Instant the OLT made the scheduling decision for this burst.
    pub gamma: SimTime,
    /// Gate signaling delay: end of gate transmission minus gamma, plus the
    /// round-trip propagation delay of this ONU.
    pub gate_delay: SimTime,
    /// End of arrival of the preceding upstream transmission at the OLT.
    pub omega: SimTime,
    /// Instant the burst starts to arrive at the OLT.
    pub alpha: SimTime,
    /// Instant the end of the burst arrives at the OLT.
    pub beta: SimTime,
    /// Channel idle time preceding this burst arrival.
    pub idle: SimTime,
    pub payload_bytes: u64,
}

impl TransmissionRecord {
    pub fn window(&self) -> SimTime {
        self.beta - self.alpha
    }
}

/// Writes the per-record trace CSV
/// (`n,theta,j,onu,gamma_ps,T_ps,omega_ps,alpha_ps,beta_ps,idle_ps,payload_bytes`).
pub fn write_record_trace<W: Write>(records: &[TransmissionRecord], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "n,theta,j,onu,gamma_ps,T_ps,omega_ps,alpha_ps,beta_ps,idle_ps,payload_bytes"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.cycle,
            r.thread,
            r.slot,
            r.onu,
            r.gamma.as_ps(),
            r.gate_delay.as_ps(),
            r.omega.as_ps(),
            r.alpha.as_ps(),
            r.beta.as_ps(),
            r.idle.as_ps(),
            r.payload_bytes
        )?;
    }
    Ok(())
}
