//! Output statistics: batched accumulation of per-packet and per-burst
//! observations, batch-means confidence intervals, and run summaries.

use crate::time::SimTime;

/// Two-sided 95% critical values of Student's t, indexed by df - 1 (df 1..=9).
const T_95: [f64; 9] = [
    12.706204736,
    4.302652730,
    3.182446305,
    2.776445105,
    2.570581836,
    2.446911851,
    2.364624252,
    2.306004135,
    2.262157163,
];

/// Number of contiguous time slices collected during measurement. Slices are
/// merged into [`BATCHES`] equal groups at finalization, which keeps batch
/// boundaries stable whether or not the run ends exactly at its horizon.
const SLICES: usize = 50;
const BATCHES: usize = 10;

#[derive(Clone, Copy, Debug, Default)]
struct Slice {
    delay_sum_s: f64,
    delay_count: u64,
    idle_sum_s: f64,
    idle_count: u64,
    cycle_sum_s: f64,
    cycle_count: u64,
    window_sum_s: f64,
    window_count: u64,
}

impl Slice {
    fn merge(&mut self, other: &Slice) {
        self.delay_sum_s += other.delay_sum_s;
        self.delay_count += other.delay_count;
        self.idle_sum_s += other.idle_sum_s;
        self.idle_count += other.idle_count;
        self.cycle_sum_s += other.cycle_sum_s;
        self.cycle_count += other.cycle_count;
        self.window_sum_s += other.window_sum_s;
        self.window_count += other.window_count;
    }
}

/// Collects observations over `[warmup, warmup + span)`, sliced by event time.
/// Observations outside the window are discarded.
#[derive(Clone, Debug)]
pub struct MetricsAccumulator {
    warmup: SimTime,
    span: SimTime,
    slices: Vec<Slice>,
}

impl MetricsAccumulator {
    pub fn new(warmup: SimTime, span: SimTime) -> Self {
        assert!(span > SimTime::ZERO, "measurement span must be positive");
        MetricsAccumulator {
            warmup,
            span,
            slices: vec![Slice::default(); SLICES],
        }
    }

    fn slice_at(&mut self, t: SimTime) -> Option<&mut Slice> {
        if t < self.warmup {
            return None;
        }
        let off = (t - self.warmup).as_ps();
        if off >= self.span.as_ps() {
            return None;
        }
        let idx = ((off as u128 * SLICES as u128) / self.span.as_ps() as u128) as usize;
        Some(&mut self.slices[idx.min(SLICES - 1)])
    }

    /// Records one delivered packet, bucketed by its delivery instant.
    pub fn record_delay(&mut self, delivered: SimTime, delay: SimTime) {
        if let Some(s) = self.slice_at(delivered) {
            s.delay_sum_s += delay.as_secs_f64();
            s.delay_count += 1;
        }
    }

    /// Records the idle gap and window length of one burst, bucketed by its
    /// arrival instant at the OLT.
    pub fn record_burst(&mut self, alpha: SimTime, idle: SimTime, window: SimTime) {
        if let Some(s) = self.slice_at(alpha) {
            s.idle_sum_s += idle.as_secs_f64();
            s.idle_count += 1;
            s.window_sum_s += window.as_secs_f64();
            s.window_count += 1;
        }
    }

    /// Records one completed polling-cycle length, bucketed by its start.
    pub fn record_cycle(&mut self, start: SimTime, length: SimTime) {
        if let Some(s) = self.slice_at(start) {
            s.cycle_sum_s += length.as_secs_f64();
            s.cycle_count += 1;
        }
    }

    /// Folds another accumulator (same warmup/span) into this one, slice by
    /// slice. Used to pool replications that share a time base.
    pub fn merge(&mut self, other: &MetricsAccumulator) {
        assert_eq!(self.warmup, other.warmup);
        assert_eq!(self.span, other.span);
        for (a, b) in self.slices.iter_mut().zip(&other.slices) {
            a.merge(b);
        }
    }

    fn batches(&self) -> Vec<Slice> {
        let per = SLICES / BATCHES;
        self.slices
            .chunks(per)
            .map(|chunk| {
                let mut acc = Slice::default();
                for s in chunk {
                    acc.merge(s);
                }
                acc
            })
            .collect()
    }

    /// Batch-means point estimates and 95% confidence half-widths.
    pub fn summarize(&self) -> RunSummary {
        let batches = self.batches();
        let stat = |sum: fn(&Slice) -> f64, count: fn(&Slice) -> u64| -> (f64, f64) {
            let means: Vec<f64> = batches
                .iter()
                .filter(|b| count(b) > 0)
                .map(|b| sum(b) / count(b) as f64)
                .collect();
            let total_n: u64 = batches.iter().map(count).sum();
            if total_n == 0 {
                return (f64::NAN, f64::NAN);
            }
            let total_sum: f64 = batches.iter().map(sum).sum();
            let (_, ci) = confidence_interval(&means);
            // Point estimate uses the overall (count-weighted) mean.
            (total_sum / total_n as f64, ci)
        };
        let (mean_delay_s, ci_delay) = stat(|s| s.delay_sum_s, |s| s.delay_count);
        let (mean_idle_s, ci_idle) = stat(|s| s.idle_sum_s, |s| s.idle_count);
        let (mean_cycle_s, _) = stat(|s| s.cycle_sum_s, |s| s.cycle_count);
        let (mean_window_s, _) = stat(|s| s.window_sum_s, |s| s.window_count);
        RunSummary {
            mean_delay_s,
            ci_delay,
            mean_idle_s,
            ci_idle,
            mean_cycle_s,
            mean_window_s,
            delivered: self.slices.iter().map(|s| s.delay_count).sum(),
            seed_count: 1,
            saturated: false,
        }
    }
}

/// Sample mean and 95% half-width of a small sample (t distribution). Returns
/// a zero half-width for fewer than two values.
pub fn confidence_interval(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = T_95[(n - 2).min(T_95.len() - 1)];
    (mean, t * (var / n as f64).sqrt())
}

/// Point estimates for one (policy, reporting, load) cell, with 95%
/// confidence half-widths for delay and idle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub mean_delay_s: f64,
    pub ci_delay: f64,
    pub mean_idle_s: f64,
    pub ci_idle: f64,
    pub mean_cycle_s: f64,
    pub mean_window_s: f64,
    pub delivered: u64,
    pub seed_count: u32,
    pub saturated: bool,
}

impl RunSummary {
    /// Combines summaries from independent replications: means are averaged
    /// and, with two or more replications, confidence intervals are recomputed
    /// across the replication means (which dominates within-run batch error).
    pub fn combine(runs: &[RunSummary]) -> RunSummary {
        assert!(!runs.is_empty());
        if runs.len() == 1 {
            return runs[0];
        }
        let avg = |f: fn(&RunSummary) -> f64| -> f64 {
            runs.iter().map(f).sum::<f64>() / runs.len() as f64
        };
        let (mean_delay_s, ci_delay) =
            confidence_interval(&runs.iter().map(|r| r.mean_delay_s).collect::<Vec<_>>());
        let (mean_idle_s, ci_idle) =
            confidence_interval(&runs.iter().map(|r| r.mean_idle_s).collect::<Vec<_>>());
        RunSummary {
            mean_delay_s,
            ci_delay,
            mean_idle_s,
            ci_idle,
            mean_cycle_s: avg(|r| r.mean_cycle_s),
            mean_window_s: avg(|r| r.mean_window_s),
            delivered: runs.iter().map(|r| r.delivered).sum(),
            seed_count: runs.iter().map(|r| r.seed_count).sum(),
            saturated: runs.iter().any(|r| r.saturated),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn t_table_spot_checks() {
        assert!((T_95[0] - 12.706).abs() < 1e-3);
        assert!((T_95[8] - 2.262).abs() < 1e-3);
    }

    #[test]
    fn constant_observations_have_zero_width() {
        let mut acc = MetricsAccumulator::new(SimTime::ZERO, SimTime::from_secs(1));
        for i in 0..1000u64 {
            let t = SimTime::from_ps(i * 999_000_000);
            acc.record_delay(t, SimTime::from_ms(3));
            acc.record_burst(t, SimTime::from_us(30), SimTime::from_us(100));
        }
        let s = acc.summarize();
        assert!((s.mean_delay_s - 3e-3).abs() < 1e-12);
        assert!(s.ci_delay.abs() < 1e-12);
        assert!((s.mean_idle_s - 30e-6).abs() < 1e-15);
        assert!((s.mean_window_s - 100e-6).abs() < 1e-15);
        assert_eq!(s.delivered, 1000);
    }

    #[test]
    fn warmup_and_horizon_are_excluded() {
        let mut acc = MetricsAccumulator::new(SimTime::from_secs(1), SimTime::from_secs(1));
        acc.record_delay(SimTime::from_ms(999), SimTime::from_ms(1)); // warmup
        acc.record_delay(SimTime::from_secs(2), SimTime::from_ms(1)); // past horizon
        acc.record_delay(SimTime::from_ms(1500), SimTime::from_ms(2));
        let s = acc.summarize();
        assert_eq!(s.delivered, 1);
        assert!((s.mean_delay_s - 2e-3).abs() < 1e-12);
    }

    #[test]
    fn empty_accumulator_reports_nan() {
        let s = MetricsAccumulator::new(SimTime::ZERO, SimTime::from_secs(1)).summarize();
        assert!(s.mean_delay_s.is_nan());
        assert!(s.mean_idle_s.is_nan());
    }

    #[test]
    fn merge_pools_observations() {
        let mut a = MetricsAccumulator::new(SimTime::ZERO, SimTime::from_secs(1));
        let mut b = a.clone();
        a.record_delay(SimTime::from_ms(100), SimTime::from_ms(2));
        b.record_delay(SimTime::from_ms(600), SimTime::from_ms(4));
        a.merge(&b);
        let s = a.summarize();
        assert_eq!(s.delivered, 2);
        assert!((s.mean_delay_s - 3e-3).abs() < 1e-12);
    }

    #[test]
    fn combine_across_seeds() {
        let mk = |d: f64| RunSummary {
            mean_delay_s: d,
            ci_delay: 0.0,
            mean_idle_s: 1e-5,
            ci_idle: 0.0,
            mean_cycle_s: 2e-3,
            mean_window_s: 1e-4,
            delivered: 10,
            seed_count: 1,
            saturated: false,
        };
        let c = RunSummary::combine(&[mk(1e-3), mk(2e-3), mk(3e-3)]);
        assert_eq!(c.seed_count, 3);
        assert_eq!(c.delivered, 30);
        assert!((c.mean_delay_s - 2e-3).abs() < 1e-12);
        // half-width = t(2) * s/sqrt(3), s = 1e-3
        assert!((c.ci_delay - 4.302652730 * 1e-3 / 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn interval_coverage_near_95_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(5.0, 2.0).unwrap();
        let trials = 20_000;
        let mut covered = 0;
        for _ in 0..trials {
            let sample: Vec<f64> = (0..10).map(|_| normal.sample(&mut rng)).collect();
            let (mean, hw) = confidence_interval(&sample);
            if (mean - 5.0).abs() <= hw {
                covered += 1;
            }
        }
        let coverage = covered as f64 / trials as f64;
        assert!(
            (0.93..=0.97).contains(&coverage),
            "coverage {coverage} outside [0.93, 0.97]"
        );
    }
}
