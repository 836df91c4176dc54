//! Self-similar packet arrival generation.
//!
//! Each ONU superposes `sources_per_onu` independent on/off sub-sources.
//! On-period lengths are heavy-tailed in whole packets
//! (`P(K >= k) = k^-shape`), off-period durations are Pareto with the same
//! shape, and `shape = 3 - 2H` so the aggregate exhibits Hurst parameter H.
//! During an on-period a source emits packets back to back at its peak rate;
//! a packet materializes at the end of its emission slot.
//!
//! The generator is ChaCha8-based with one substream per (ONU, sub-source),
//! so identical seeds give bitwise-identical streams and adding ONUs does
//! not perturb existing ones.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::time::{SimTime, TICKS_PER_SEC};

/// Packet size mix of the workload model.
pub const DEFAULT_SIZE_PMF: [(u32, f64); 4] =
    [(64, 0.60), (300, 0.04), (580, 0.11), (1518, 0.25)];

pub const DEFAULT_HURST: f64 = 0.75;
pub const DEFAULT_SOURCES_PER_ONU: usize = 32;

/// Substream ids: onu * STREAM_STRIDE + source index. Topology reserves
/// u64::MAX.
const STREAM_STRIDE: u64 = 4096;

/// Off periods are clamped here; exceedance probability is ~1e-13 for the
/// calibrated scales, so the mean-rate bias is negligible.
const MAX_OFF_TICKS: f64 = 1e18;
const MAX_BURST_PACKETS: f64 = 1e9;

/// A sub-source emits at C / (PEAK_DIVISOR * sources_per_onu). Keeping one
/// source's peak well below an ONU's sustained service share means queue
/// build-up needs several sources on at once, so burstiness comes from the
/// superposition (the long-range-dependent part) rather than from a single
/// heavy-tailed on-period swamping its ONU.
const PEAK_DIVISOR: u64 = 8;

#[derive(Clone, Debug)]
pub struct TrafficConfig {
    pub hurst: f64,
    /// Long-run aggregate payload bit rate over all ONUs.
    pub load_bps: u64,
    /// Per-ONU load weights; `None` means a uniform split.
    pub per_onu_share: Option<Vec<f64>>,
    pub size_pmf: Vec<(u32, f64)>,
    pub sources_per_onu: usize,
    pub seed: u64,
}

impl TrafficConfig {
    pub fn new(load_bps: u64, seed: u64) -> TrafficConfig {
        TrafficConfig {
            hurst: DEFAULT_HURST,
            load_bps,
            per_onu_share: None,
            size_pmf: DEFAULT_SIZE_PMF.to_vec(),
            sources_per_onu: DEFAULT_SOURCES_PER_ONU,
            seed,
        }
    }

    pub fn validate(&self, num_onus: u32) -> Result<(), TrafficError> {
        let pmf_sum: f64 = self.size_pmf.iter().map(|(_, p)| p).sum();
        if (pmf_sum - 1.0).abs() > 1e-9 || self.size_pmf.iter().any(|(_, p)| *p < 0.0) {
            return Err(TrafficError::BadSizePmf(pmf_sum));
        }
        if let Some(w) = &self.per_onu_share {
            if w.len() != num_onus as usize {
                return Err(TrafficError::WeightCount {
                    got: w.len(),
                    want: num_onus as usize,
                });
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || w.iter().any(|x| *x < 0.0) {
                return Err(TrafficError::BadWeights(sum));
            }
        }
        if !(0.5..1.0).contains(&self.hurst) {
            return Err(TrafficError::BadHurst(self.hurst));
        }
        if self.sources_per_onu == 0 {
            return Err(TrafficError::NoSources);
        }
        Ok(())
    }

    pub fn onu_share(&self, num_onus: u32, onu: u32) -> f64 {
        match &self.per_onu_share {
            Some(w) => w[onu as usize],
            None => 1.0 / num_onus as f64,
        }
    }

    /// Pareto shape for the on/off sojourns: 3 - 2H.
    pub fn shape(&self) -> f64 {
        3.0 - 2.0 * self.hurst
    }
}

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("packet size probabilities sum to {0}, expected 1")]
    BadSizePmf(f64),
    #[error("got {got} per-ONU weights, expected {want}")]
    WeightCount { got: usize, want: usize },
    #[error("per-ONU weights sum to {0}, expected 1")]
    BadWeights(f64),
    #[error("hurst parameter {0} outside [0.5, 1)")]
    BadHurst(f64),
    #[error("sources_per_onu must be at least 1")]
    NoSources,
}

/// Mean payload size in bits under the configured size mix.
pub fn mean_payload_bits(pmf: &[(u32, f64)]) -> f64 {
    pmf.iter().map(|(s, p)| *s as f64 * 8.0 * p).sum()
}

/// Riemann zeta via direct summation with an Euler-Maclaurin tail; this is
/// the mean on-period length in packets for the discrete heavy-tailed draw.
pub fn zeta(s: f64) -> f64 {
    let n = 100_000u64;
    let head: f64 = (1..=n).map(|k| (k as f64).powf(-s)).sum();
    let nf = n as f64;
    head + nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
}

/// Per-ONU generator parameters produced by calibration.
#[derive(Clone, Debug)]
pub struct OnuRates {
    /// Target mean payload rate of one sub-source, bits/s.
    pub source_rate_bps: f64,
    /// Peak emission rate of one sub-source, bits/s.
    pub peak_bps: f64,
    /// Ticks per payload byte at the peak rate (exact integer).
    pub peak_ticks_per_byte: u64,
    /// Pareto scale of the off period, in ticks.
    pub off_scale_ticks: f64,
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub per_onu: Vec<OnuRates>,
    /// Set when the requested load is not below the channel rate; the
    /// sources are clamped just under peak and the run is unstable by
    /// construction.
    pub unstable: bool,
}

/// Solves the off-period scale so that the mean payload rate of the
/// superposed sources equals the per-ONU load share analytically.
pub fn calibrate(
    cfg: &TrafficConfig,
    rate_bps: u64,
    num_onus: u32,
) -> Result<Calibration, TrafficError> {
    cfg.validate(num_onus)?;
    let unstable = cfg.load_bps >= rate_bps;
    if unstable {
        log::warn!(
            "offered load {} b/s >= channel rate {} b/s: unstable by construction",
            cfg.load_bps,
            rate_bps
        );
    }
    let shape = cfg.shape();
    let mean_burst_packets = zeta(shape);
    let mean_bits = mean_payload_bits(&cfg.size_pmf);
    let n = cfg.sources_per_onu as f64;
    let peak_bps = rate_bps as f64 / (n * PEAK_DIVISOR as f64);
    let peak_ticks_per_byte =
        (8 * TICKS_PER_SEC / rate_bps) * cfg.sources_per_onu as u64 * PEAK_DIVISOR;
    let per_onu = (0..num_onus)
        .map(|o| {
            let share = cfg.onu_share(num_onus, o);
            let mut source_rate = cfg.load_bps as f64 * share / n;
            if source_rate >= peak_bps {
                source_rate = peak_bps * 0.999;
            }
            let off_scale_ticks = if source_rate <= 0.0 {
                0.0
            } else {
                let burst_bits = mean_burst_packets * mean_bits;
                // E[off] = burst_bits/rate - burst_bits/peak, scale = E*(a-1)/a
                let mean_off_secs = burst_bits / source_rate - burst_bits / peak_bps;
                mean_off_secs * (shape - 1.0) / shape * TICKS_PER_SEC as f64
            };
            OnuRates {
                source_rate_bps: source_rate,
                peak_bps,
                peak_ticks_per_byte,
                off_scale_ticks,
            }
        })
        .collect();
    Ok(Calibration { per_onu, unstable })
}

struct OnOffSource {
    rng: ChaCha8Rng,
    /// Clock at the end of the last emitted packet slot, ticks.
    t: u64,
    burst_left: u32,
    inv_shape: f64,
    off_scale: f64,
    peak_ticks_per_byte: u64,
    /// Cumulative size thresholds.
    size_cdf: Vec<(f64, u32)>,
}

impl OnOffSource {
    fn next(&mut self) -> (u64, u32) {
        if self.burst_left == 0 {
            let off = self.sample_pareto(self.off_scale).min(MAX_OFF_TICKS);
            self.t = self.t.saturating_add(off as u64);
            self.burst_left = self.sample_burst_len();
        }
        let size = self.sample_size();
        self.t += size as u64 * self.peak_ticks_per_byte;
        self.burst_left -= 1;
        (self.t, size)
    }

    fn uniform_open(&mut self) -> f64 {
        // (0, 1]: keeps the power transform finite
        1.0 - self.rng.gen::<f64>()
    }

    fn sample_pareto(&mut self, scale: f64) -> f64 {
        scale * self.uniform_open().powf(-self.inv_shape)
    }

    fn sample_burst_len(&mut self) -> u32 {
        let k = self.uniform_open().powf(-self.inv_shape).min(MAX_BURST_PACKETS);
        k as u32
    }

    fn sample_size(&mut self) -> u32 {
        let u = self.rng.gen::<f64>();
        for (cum, size) in &self.size_cdf {
            if u < *cum {
                return *size;
            }
        }
        self.size_cdf.last().unwrap().1
    }
}

/// Merged arrival stream of one ONU.
pub struct OnuTraffic {
    sources: Vec<OnOffSource>,
    pending: Vec<(u64, u32)>,
}

impl OnuTraffic {
    pub fn new(cfg: &TrafficConfig, rates: &OnuRates, onu: u32) -> OnuTraffic {
        if rates.source_rate_bps <= 0.0 {
            return OnuTraffic {
                sources: Vec::new(),
                pending: Vec::new(),
            };
        }
        let size_cdf: Vec<(f64, u32)> = {
            let mut cum = 0.0;
            cfg.size_pmf
                .iter()
                .map(|(s, p)| {
                    cum += p;
                    (cum, *s)
                })
                .collect()
        };
        let inv_shape = 1.0 / cfg.shape();
        let mut sources: Vec<OnOffSource> = (0..cfg.sources_per_onu)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(onu as u64 * STREAM_STRIDE + s as u64);
                OnOffSource {
                    rng,
                    t: 0,
                    burst_left: 0,
                    inv_shape,
                    off_scale: rates.off_scale_ticks,
                    peak_ticks_per_byte: rates.peak_ticks_per_byte,
                    size_cdf: size_cdf.clone(),
                }
            })
            .collect();
        let pending = sources.iter_mut().map(|s| s.next()).collect();
        OnuTraffic { sources, pending }
    }

    /// Next (generation instant, size in bytes); `None` only for a
    /// zero-rate ONU. Instants are non-decreasing.
    pub fn next_arrival(&mut self) -> Option<(SimTime, u32)> {
        if self.sources.is_empty() {
            return None;
        }
        let mut best = 0;
        for i in 1..self.pending.len() {
            if self.pending[i].0 < self.pending[best].0 {
                best = i;
            }
        }
        let (t, size) = self.pending[best];
        self.pending[best] = self.sources[best].next();
        Some((SimTime::from_ps(t), size))
    }
}

/// Time-merged arrival stream over all ONUs (trace dumps and estimators).
pub struct AggregateTraffic {
    onus: Vec<OnuTraffic>,
    pending: Vec<Option<(SimTime, u32)>>,
}

impl AggregateTraffic {
    pub fn new(cfg: &TrafficConfig, rate_bps: u64, num_onus: u32) -> Result<Self, TrafficError> {
        let cal = calibrate(cfg, rate_bps, num_onus)?;
        let mut onus: Vec<OnuTraffic> = (0..num_onus)
            .map(|o| OnuTraffic::new(cfg, &cal.per_onu[o as usize], o))
            .collect();
        let pending = onus.iter_mut().map(|o| o.next_arrival()).collect();
        Ok(AggregateTraffic { onus, pending })
    }

    /// Next (instant, onu, size) across all ONUs, in time order.
    pub fn next_arrival(&mut self) -> Option<(SimTime, u32, u32)> {
        let best = self
            .pending
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|(t, _)| (t, i)))
            .min()?;
        let (t, size) = self.pending[best.1].unwrap();
        self.pending[best.1] = self.onus[best.1].next_arrival();
        Some((t, best.1 as u32, size))
    }
}

/// Dumps `t_gen_ps,onu,size_bytes` rows for arrivals up to `until`.
pub fn write_trace<W: Write>(
    cfg: &TrafficConfig,
    rate_bps: u64,
    num_onus: u32,
    until: SimTime,
    mut w: W,
) -> io::Result<()> {
    let mut agg = AggregateTraffic::new(cfg, rate_bps, num_onus)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    writeln!(w, "t_gen_ps,onu,size_bytes")?;
    while let Some((t, onu, size)) = agg.next_arrival() {
        if t > until {
            break;
        }
        writeln!(w, "{},{},{}", t.as_ps(), onu, size)?;
    }
    Ok(())
}
