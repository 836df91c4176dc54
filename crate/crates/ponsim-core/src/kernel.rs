//! Discrete-event simulation of the upstream channel.
//!
//! The OLT plans each granted burst completely at its scheduling instant:
//! the burst occupies its full granted window, so the planned end-of-arrival
//! chain equals the realized one and every emitted record satisfies the
//! closed-form arrival/idle expressions exactly at tick resolution. Payload
//! content is decided ONU-side when the burst starts (whole packets for
//! EPON, byte-granular fragments for GPON); unfilled window space is wasted,
//! it does not shrink the window.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::dba::{self, DbaPolicy, Framework, Reporting, Sizing};
use crate::metrics::{MetricsAccumulator, RunSummary};
use crate::profile::{Framing, PonProfile, Standard};
use crate::record::TransmissionRecord;
use crate::time::SimTime;
use crate::topology::{RangeProfile, Topology};
use crate::traffic::{calibrate, OnuTraffic, TrafficConfig, TrafficError};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub standard: Standard,
    pub range: RangeProfile,
    pub num_onus: u32,
    pub policy: DbaPolicy,
    pub traffic: TrafficConfig,
    /// Total simulated horizon.
    pub duration: SimTime,
    /// Observations before this instant are discarded.
    pub warmup: SimTime,
    /// Stop generating new packets after this instant (default: `duration`).
    pub traffic_stop: Option<SimTime>,
    /// Early stop once this many packets have been delivered.
    pub max_delivered: Option<u64>,
    /// Total queued bytes beyond which the run is flagged saturated.
    pub saturation_bytes: Option<u64>,
    /// Keep the full per-burst record trace (memory-heavy on long runs).
    pub collect_records: bool,
}

impl RunConfig {
    pub fn new(
        standard: Standard,
        range: RangeProfile,
        num_onus: u32,
        policy: DbaPolicy,
        traffic: TrafficConfig,
        duration: SimTime,
        warmup: SimTime,
    ) -> RunConfig {
        RunConfig {
            standard,
            range,
            num_onus,
            policy,
            traffic,
            duration,
            warmup,
            traffic_stop: None,
            max_delivered: None,
            saturation_bytes: None,
            collect_records: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("warmup {warmup} must precede the horizon {duration}")]
    InvalidHorizon { warmup: SimTime, duration: SimTime },
}

#[derive(Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<TransmissionRecord>,
    pub topology: Topology,
    pub generated: u64,
    pub delivered: u64,
    pub queued_packets: u64,
    pub queued_bytes: u64,
    pub saturated: bool,
}

const RANK_DECODE: u8 = 0;
const RANK_BOOTSTRAP: u8 = 1;
const RANK_TX_START: u8 = 2;
const RANK_TX_END: u8 = 3;
const RANK_OLT_START: u8 = 4;
const RANK_OLT_END: u8 = 5;
const RANK_ARRIVAL: u8 = 6;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct EventKey {
    t: SimTime,
    rank: u8,
    onu: u32,
    seq: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Decode(usize),
    /// Delayed initial grants of polling thread 2.
    BootstrapThread2,
    TxStart(usize),
    TxEnd(usize),
    OltStart(usize),
    OltEnd(usize),
    Arrival { onu: u32, size: u32 },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    key: EventKey,
    kind: EventKind,
}

struct Burst {
    onu: u32,
    thread: u8,
    cycle: u64,
    slot: u32,
    gamma: SimTime,
    gate_delay: SimTime,
    omega: SimTime,
    alpha: SimTime,
    beta: SimTime,
    idle: SimTime,
    /// Reported bytes this grant answers; released from `outstanding` when
    /// the burst starts.
    serviced_report: u64,
    reporting: Reporting,
    report_bytes: Option<u64>,
    payload_bytes: u64,
}

struct OnuState {
    /// FIFO of (generation instant ps, size bytes).
    queue: VecDeque<(u64, u32)>,
    queue_bytes: u64,
    /// Bytes of the head packet already carried in earlier bursts (GPON).
    head_sent: u32,
    /// Bytes reported but not yet answered by a started burst.
    outstanding: u64,
    traffic: OnuTraffic,
}

#[derive(Default)]
struct ThreadState {
    next_cycle: u64,
    last_cycle_gamma: Option<SimTime>,
    /// Online frameworks: grants issued so far (slot/cycle bookkeeping).
    issued: u64,
    /// Online excess: rolling surplus pool, reset every full pass.
    pool: SimTime,
}

struct Kernel {
    cfg: RunConfig,
    profile: PonProfile,
    topology: Topology,
    g_cap: SimTime,
    ticks_per_byte: u64,
    traffic_stop: SimTime,

    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: SimTime,
    done: bool,

    onus: Vec<OnuState>,
    bursts: Vec<Burst>,
    free: Vec<usize>,
    /// Latest decoded report per (thread, onu), flattened.
    latest_report: Vec<u64>,
    threads: Vec<ThreadState>,
    /// Shared excess leftover handed from the first to the second
    /// double-phase group of the same cycle.
    dpp_share_pool: SimTime,

    /// End of the last *planned* burst arrival (authoritative chain).
    omega_plan: SimTime,
    /// End of the last burst actually observed at the OLT (assertions only).
    actual_omega: SimTime,
    downstream_free: SimTime,

    metrics: MetricsAccumulator,
    records: Vec<TransmissionRecord>,
    generated: u64,
    delivered: u64,
    queued_packets: u64,
    total_queue_bytes: u64,
    saturated: bool,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    if cfg.warmup >= cfg.duration {
        return Err(RunError::InvalidHorizon {
            warmup: cfg.warmup,
            duration: cfg.duration,
        });
    }
    let profile = PonProfile::for_standard(cfg.standard);
    let cal = calibrate(&cfg.traffic, profile.rate_bps, cfg.num_onus)?;
    let topology = Topology::generate(cfg.num_onus, cfg.range, cfg.traffic.seed);
    let onus: Vec<OnuState> = (0..cfg.num_onus)
        .map(|o| OnuState {
            queue: VecDeque::new(),
            queue_bytes: 0,
            head_sent: 0,
            outstanding: 0,
            traffic: OnuTraffic::new(&cfg.traffic, &cal.per_onu[o as usize], o),
        })
        .collect();
    let n_threads = cfg.policy.threads as usize;
    let mut kernel = Kernel {
        g_cap: cfg.policy.g_max(cfg.num_onus),
        ticks_per_byte: profile.ticks_per_byte(),
        traffic_stop: cfg.traffic_stop.unwrap_or(cfg.duration),
        heap: BinaryHeap::new(),
        seq: 0,
        now: SimTime::ZERO,
        done: false,
        onus,
        bursts: Vec::new(),
        free: Vec::new(),
        latest_report: vec![0; n_threads * cfg.num_onus as usize],
        threads: (0..n_threads).map(|_| ThreadState::default()).collect(),
        dpp_share_pool: SimTime::ZERO,
        omega_plan: SimTime::ZERO,
        actual_omega: SimTime::ZERO,
        downstream_free: SimTime::ZERO,
        metrics: MetricsAccumulator::new(cfg.warmup, cfg.duration - cfg.warmup),
        records: Vec::new(),
        generated: 0,
        delivered: 0,
        queued_packets: 0,
        total_queue_bytes: 0,
        saturated: cal.unstable,
        profile,
        topology,
        cfg: cfg.clone(),
    };
    kernel.bootstrap();
    kernel.run_loop();
    Ok(kernel.finish())
}

impl Kernel {
    fn push(&mut self, t: SimTime, rank: u8, onu: u32, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            key: EventKey {
                t,
                rank,
                onu,
                seq: self.seq,
            },
            kind,
        }));
    }

    fn bootstrap(&mut self) {
        // seed one pending arrival per ONU
        for onu in 0..self.cfg.num_onus {
            if let Some((t, size)) = self.onus[onu as usize].traffic.next_arrival() {
                if t <= self.traffic_stop {
                    self.push(t, RANK_ARRIVAL, onu, EventKind::Arrival { onu, size });
                }
            }
        }
        // initial zero-report grants
        match self.cfg.policy.framework {
            Framework::OfflineStp => {
                self.start_offline_cycle(SimTime::ZERO);
            }
            Framework::Dpp => {
                self.start_dpp_group1(SimTime::ZERO);
                self.start_dpp_group2(SimTime::ZERO);
            }
            Framework::OnlineStp => {
                for onu in 0..self.cfg.num_onus {
                    self.schedule_online(0, onu, SimTime::ZERO, 0);
                }
            }
            Framework::OnlineMtp => {
                for onu in 0..self.cfg.num_onus {
                    self.schedule_online(0, onu, SimTime::ZERO, 0);
                }
                // second thread starts half a maximum cycle later
                let t2 = self.cfg.policy.max_cycle.div(2);
                self.push(t2, RANK_BOOTSTRAP, 0, EventKind::BootstrapThread2);
            }
        }
    }

    fn run_loop(&mut self) {
        while let Some(Reverse(ev)) = self.heap.pop() {
            if ev.key.t > self.cfg.duration {
                break;
            }
            debug_assert!(ev.key.t >= self.now, "event time went backwards");
            self.now = ev.key.t;
            match ev.kind {
                EventKind::Decode(id) => self.on_decode(id),
                EventKind::BootstrapThread2 => {
                    for onu in 0..self.cfg.num_onus {
                        self.schedule_online(1, onu, self.now, 0);
                    }
                }
                EventKind::TxStart(id) => self.on_tx_start(id),
                EventKind::TxEnd(id) => self.on_tx_end(id),
                EventKind::OltStart(id) => self.on_olt_start(id),
                EventKind::OltEnd(id) => self.on_olt_end(id),
                EventKind::Arrival { onu, size } => self.on_arrival(onu, size),
            }
            if self.done {
                break;
            }
        }
    }

    fn finish(self) -> RunOutput {
        let mut summary = self.metrics.summarize();
        summary.saturated = self.saturated;
        RunOutput {
            summary,
            records: self.records,
            topology: self.topology,
            generated: self.generated,
            delivered: self.delivered,
            queued_packets: self.queued_packets,
            queued_bytes: self.total_queue_bytes,
            saturated: self.saturated,
        }
    }

    // ---- downstream control channel ----

    /// Instant the grant message for a decision at `gamma` finishes leaving
    /// the OLT: serialized gate messages for EPON, the next frame header for
    /// GPON.
    fn gate_send_end(&mut self, gamma: SimTime) -> SimTime {
        match self.profile.framing {
            Framing::EponBurst => {
                let start = gamma.max(self.downstream_free);
                let end = start + self.profile.gate_time;
                self.downstream_free = end;
                end
            }
            Framing::GponFrame { period } => gamma.align_up(period),
        }
    }

    // ---- scheduling ----

    fn on_decode(&mut self, id: usize) {
        let b = &self.bursts[id];
        let (onu, thread, slot) = (b.onu, b.thread, b.slot);
        let reported = b.report_bytes.expect("report sampled before decode");
        let ti = (thread - 1) as usize;
        self.latest_report[ti * self.cfg.num_onus as usize + onu as usize] = reported;
        let now = self.now;
        match self.cfg.policy.framework {
            Framework::OfflineStp => {
                if slot == self.cfg.num_onus {
                    self.start_offline_cycle(now);
                }
            }
            Framework::Dpp => {
                let g1 = DbaPolicy::dpp_group1(self.cfg.num_onus);
                if slot == g1 {
                    self.start_dpp_group1(now);
                } else if slot == self.cfg.num_onus {
                    self.start_dpp_group2(now);
                }
            }
            Framework::OnlineStp | Framework::OnlineMtp => {
                self.schedule_online(ti, onu, now, reported);
            }
        }
    }

    fn start_offline_cycle(&mut self, gamma: SimTime) {
        let o = self.cfg.num_onus;
        let cycle = self.begin_cycle(0, gamma);
        self.schedule_group(1, cycle, 1, o, gamma, SimTime::ZERO);
    }

    fn start_dpp_group1(&mut self, gamma: SimTime) {
        let g1 = DbaPolicy::dpp_group1(self.cfg.num_onus);
        let cycle = self.begin_cycle(0, gamma);
        let leftover = self.schedule_group(1, cycle, 1, g1, gamma, SimTime::ZERO);
        self.dpp_share_pool = leftover;
    }

    fn start_dpp_group2(&mut self, gamma: SimTime) {
        let o = self.cfg.num_onus;
        let g1 = DbaPolicy::dpp_group1(o);
        if g1 >= o {
            return; // single-ONU network: no second group
        }
        let cycle = self.threads[0].next_cycle - 1;
        let pool = std::mem::replace(&mut self.dpp_share_pool, SimTime::ZERO);
        let pool = if self.cfg.policy.sizing == Sizing::ExcessShare {
            pool
        } else {
            SimTime::ZERO
        };
        self.schedule_group(1, cycle, g1 + 1, o, gamma, pool);
    }

    /// Starts a new cycle pass for a thread: emits the cycle-length sample
    /// and returns the new cycle number.
    fn begin_cycle(&mut self, ti: usize, gamma: SimTime) -> u64 {
        let st = &mut self.threads[ti];
        if let Some(prev) = st.last_cycle_gamma {
            let length = gamma - prev;
            self.metrics.record_cycle(prev, length);
        }
        let st = &mut self.threads[ti];
        st.last_cycle_gamma = Some(gamma);
        st.next_cycle += 1;
        st.next_cycle
    }

    /// Sizes and plans the bursts of slots `first..=last` (slot j carries
    /// ONU j-1), returning the excess-share leftover pool.
    fn schedule_group(
        &mut self,
        thread: u8,
        cycle: u64,
        first: u32,
        last: u32,
        gamma: SimTime,
        pool_in: SimTime,
    ) -> SimTime {
        let o = self.cfg.num_onus as usize;
        let ti = (thread - 1) as usize;
        let serviced: Vec<u64> = (first..=last)
            .map(|j| self.latest_report[ti * o + (j - 1) as usize])
            .collect();
        let demands: Vec<SimTime> = serviced
            .iter()
            .map(|r| dba::size_gated(*r, &self.profile))
            .collect();
        let mut pool_out = SimTime::ZERO;
        let windows: Vec<SimTime> = match self.cfg.policy.sizing {
            Sizing::Gated => demands,
            Sizing::Limited => demands.into_iter().map(|d| d.min(self.g_cap)).collect(),
            Sizing::Excess => dba::distribute_excess(&demands, self.g_cap),
            Sizing::ExcessShare => {
                let (grants, left) =
                    dba::distribute_excess_with_pool(&demands, self.g_cap, pool_in);
                pool_out = left;
                grants
            }
        };
        for (i, j) in (first..=last).enumerate() {
            let window = self.align_window(j - 1, windows[i], serviced[i]);
            self.schedule_burst(thread, cycle, j, j - 1, gamma, window, serviced[i]);
        }
        pool_out
    }

    /// Snaps a capped grant down to a whole-frame boundary of the demand it
    /// answers. On a burst-mode (non-fragmenting) link a grant ending
    /// mid-frame strands its tail as dead time; multi-threshold reports give
    /// the scheduler the frame boundaries, so it never issues such a grant.
    /// The unserved remainder shows up in the next report.
    fn align_window(&self, onu: u32, window: SimTime, reported: u64) -> SimTime {
        if self.profile.is_gpon() || reported == 0 {
            return window;
        }
        if window >= dba::size_gated(reported, &self.profile) {
            return window;
        }
        let st = &self.onus[onu as usize];
        // Frames already promised to earlier outstanding grants sit at the
        // queue front; this grant's demand starts behind them.
        let skip = st.outstanding.saturating_sub(reported);
        let cap = (window - self.profile.report_time).as_ps() / self.ticks_per_byte;
        let mut passed = 0u64;
        let mut acc = 0u64;
        for &(_, size) in &st.queue {
            let size = size as u64;
            if passed < skip {
                passed += size;
                continue;
            }
            if acc + size > cap {
                break;
            }
            acc += size;
            if acc >= reported {
                break;
            }
        }
        self.profile.report_time + SimTime::from_ps(acc * self.ticks_per_byte)
    }

    /// One grant decision of an online framework (single decode, single ONU).
    fn schedule_online(&mut self, ti: usize, onu: u32, gamma: SimTime, reported: u64) {
        let o = self.cfg.num_onus as u64;
        let window = self.online_window(ti, reported);
        let window = self.align_window(onu, window, reported);
        let (cycle, slot) = {
            let issued = self.threads[ti].issued;
            (issued / o + 1, (issued % o) as u32 + 1)
        };
        if slot == 1 {
            self.begin_cycle(ti, gamma);
        }
        self.threads[ti].issued += 1;
        self.schedule_burst(ti as u8 + 1, cycle, slot, onu, gamma, window, reported);
    }

    fn online_window(&mut self, ti: usize, reported: u64) -> SimTime {
        let demand = dba::size_gated(reported, &self.profile);
        match self.cfg.policy.sizing {
            Sizing::Gated => demand,
            Sizing::Limited => demand.min(self.g_cap),
            // Online excess: first-come-first-served surplus pool over the
            // rolling pass, cleared whenever a full pass completes.
            Sizing::Excess | Sizing::ExcessShare => {
                let g = self.g_cap;
                let st = &mut self.threads[ti];
                let window = if demand <= g {
                    st.pool += g - demand;
                    demand
                } else {
                    let extra = (demand - g).min(st.pool);
                    st.pool -= extra;
                    g + extra
                };
                if (st.issued + 1) % self.cfg.num_onus as u64 == 0 {
                    st.pool = SimTime::ZERO;
                }
                window
            }
        }
    }

    fn schedule_burst(
        &mut self,
        thread: u8,
        cycle: u64,
        slot: u32,
        onu: u32,
        gamma: SimTime,
        window: SimTime,
        serviced_report: u64,
    ) {
        debug_assert!(window >= self.profile.report_time);
        let tau = self.topology.tau(onu);
        let send_end = self.gate_send_end(gamma);
        let gate_delay = send_end - gamma + tau.mul(2);
        let omega = self.omega_plan;
        let alpha = (omega + self.profile.guard).max(gamma + gate_delay);
        let beta = alpha + window;
        self.omega_plan = beta;
        let reporting = dba::slot_reporting(&self.cfg.policy, slot, self.cfg.num_onus);
        let burst = Burst {
            onu,
            thread,
            cycle,
            slot,
            gamma,
            gate_delay,
            omega,
            alpha,
            beta,
            idle: alpha - omega,
            serviced_report,
            reporting,
            report_bytes: None,
            payload_bytes: 0,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.bursts[id] = burst;
                id
            }
            None => {
                self.bursts.push(burst);
                self.bursts.len() - 1
            }
        };
        self.push(alpha - tau, RANK_TX_START, onu, EventKind::TxStart(id));
        self.push(beta - tau, RANK_TX_END, onu, EventKind::TxEnd(id));
        self.push(alpha, RANK_OLT_START, onu, EventKind::OltStart(id));
        self.push(beta, RANK_OLT_END, onu, EventKind::OltEnd(id));
        let decode = match reporting {
            Reporting::Beginning => alpha + self.profile.report_time,
            _ => beta,
        };
        self.push(decode, RANK_DECODE, onu, EventKind::Decode(id));
    }

    // ---- ONU side ----

    fn sample_report(&mut self, id: usize) {
        let onu = self.bursts[id].onu as usize;
        let st = &mut self.onus[onu];
        let report = st.queue_bytes.saturating_sub(st.outstanding);
        st.outstanding += report;
        self.bursts[id].report_bytes = Some(report);
    }

    fn on_tx_start(&mut self, id: usize) {
        let (onu, alpha, window, serviced, reporting) = {
            let b = &self.bursts[id];
            (b.onu as usize, b.alpha, b.beta - b.alpha, b.serviced_report, b.reporting)
        };
        self.onus[onu].outstanding = self.onus[onu].outstanding.saturating_sub(serviced);
        let tpb = self.ticks_per_byte;
        let mut cap_bytes = (window - self.profile.report_time).as_ps() / tpb;
        let payload_start = match reporting {
            Reporting::Beginning => alpha + self.profile.report_time,
            _ => alpha,
        };
        let fragmenting = self.profile.is_gpon();
        let mut sent: u64 = 0;
        loop {
            let st = &mut self.onus[onu];
            let Some(&(t_gen, size)) = st.queue.front() else {
                break;
            };
            let remaining = (size - st.head_sent) as u64;
            if remaining <= cap_bytes {
                st.queue.pop_front();
                st.head_sent = 0;
                st.queue_bytes -= remaining;
                self.total_queue_bytes -= remaining;
                sent += remaining;
                cap_bytes -= remaining;
                let delivered = payload_start + SimTime::from_ps(sent * tpb);
                self.metrics
                    .record_delay(delivered, delivered - SimTime::from_ps(t_gen));
                self.delivered += 1;
                self.queued_packets -= 1;
            } else if fragmenting && cap_bytes > 0 {
                st.head_sent += cap_bytes as u32;
                st.queue_bytes -= cap_bytes;
                self.total_queue_bytes -= cap_bytes;
                sent += cap_bytes;
                break;
            } else {
                break;
            }
        }
        self.bursts[id].payload_bytes = sent;
        if reporting == Reporting::Beginning {
            self.sample_report(id);
        }
        if let Some(max) = self.cfg.max_delivered {
            if self.delivered >= max {
                self.done = true;
            }
        }
    }

    fn on_tx_end(&mut self, id: usize) {
        if self.bursts[id].reporting != Reporting::Beginning {
            self.sample_report(id);
        }
    }

    // ---- OLT side ----

    fn on_olt_start(&mut self, id: usize) {
        let b = &self.bursts[id];
        debug_assert!(
            b.alpha >= self.actual_omega + self.profile.guard || self.actual_omega.is_zero(),
            "guard violation: burst arrives {} after channel busy until {}",
            b.alpha,
            self.actual_omega
        );
        self.metrics.record_burst(b.alpha, b.idle, b.beta - b.alpha);
    }

    fn on_olt_end(&mut self, id: usize) {
        let b = &self.bursts[id];
        self.actual_omega = b.beta;
        if self.cfg.collect_records {
            self.records.push(TransmissionRecord {
                cycle: b.cycle,
                thread: b.thread,
                slot: b.slot,
                onu: b.onu,
                gamma: b.gamma,
                gate_delay: b.gate_delay,
                omega: b.omega,
                alpha: b.alpha,
                beta: b.beta,
                idle: b.idle,
                payload_bytes: b.payload_bytes,
            });
        }
        self.free.push(id);
    }

    // ---- traffic ----

    fn on_arrival(&mut self, onu: u32, size: u32) {
        let st = &mut self.onus[onu as usize];
        st.queue.push_back((self.now.as_ps(), size));
        st.queue_bytes += size as u64;
        self.total_queue_bytes += size as u64;
        self.generated += 1;
        self.queued_packets += 1;
        if let Some(bound) = self.cfg.saturation_bytes {
            if self.total_queue_bytes > bound {
                self.saturated = true;
            }
        }
        if let Some((t, next_size)) = self.onus[onu as usize].traffic.next_arrival() {
            if t <= self.traffic_stop {
                self.push(t, RANK_ARRIVAL, onu, EventKind::Arrival { onu, size: next_size });
            }
        }
    }
}
