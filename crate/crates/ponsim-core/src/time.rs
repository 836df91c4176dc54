//! Integer time base. One tick is one picosecond, so every quantity in the
//! model (30 ns guard times, 0.1 ns per bit at 10 Gb/s, 125 us frames) is
//! representable exactly and timing identities can be checked at tick
//! resolution without floating-point drift.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use thiserror::Error;

pub const TICKS_PER_NS: u64 = 1_000;
pub const TICKS_PER_US: u64 = 1_000_000;
pub const TICKS_PER_MS: u64 = 1_000_000_000;
pub const TICKS_PER_SEC: u64 = 1_000_000_000_000;

/// Simulation time or duration in integer picosecond ticks.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns * TICKS_PER_NS)
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime(us * TICKS_PER_US)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * TICKS_PER_MS)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * TICKS_PER_SEC)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_SEC as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn mul(self, k: u64) -> SimTime {
        SimTime(self.0.checked_mul(k).expect("SimTime multiply overflow"))
    }

    pub fn div(self, k: u64) -> SimTime {
        SimTime(self.0 / k)
    }

    /// Smallest multiple of `period` that is >= self.
    pub fn align_up(self, period: SimTime) -> SimTime {
        assert!(period.0 > 0, "alignment period must be positive");
        let rem = self.0 % period.0;
        if rem == 0 {
            self
        } else {
            SimTime(self.0 + (period.0 - rem))
        }
    }

    /// Parses a duration with unit suffix: "250ps", "30ns", "62.5us",
    /// "4ms", "60s". A bare number is rejected.
    pub fn parse(text: &str) -> Result<SimTime, TimeParseError> {
        let t = text.trim();
        let (num, unit): (&str, u64) = if let Some(v) = t.strip_suffix("ps") {
            (v, 1)
        } else if let Some(v) = t.strip_suffix("ns") {
            (v, TICKS_PER_NS)
        } else if let Some(v) = t.strip_suffix("us") {
            (v, TICKS_PER_US)
        } else if let Some(v) = t.strip_suffix("\u{b5}s") {
            (v, TICKS_PER_US)
        } else if let Some(v) = t.strip_suffix("ms") {
            (v, TICKS_PER_MS)
        } else if let Some(v) = t.strip_suffix('s') {
            (v, TICKS_PER_SEC)
        } else {
            return Err(TimeParseError::MissingUnit(t.to_string()));
        };
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| TimeParseError::BadNumber(t.to_string()))?;
        if !value.is_finite() || value < 0.0 {
            return Err(TimeParseError::BadNumber(t.to_string()));
        }
        let ticks = value * unit as f64;
        if ticks > u64::MAX as f64 {
            return Err(TimeParseError::OutOfRange(t.to_string()));
        }
        Ok(SimTime(ticks.round() as u64))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.checked_add(rhs.0).expect("SimTime add overflow"))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(
            self.0
                .checked_sub(rhs.0)
                .expect("SimTime subtraction underflow"),
        )
    }
}

impl SubAssign for SimTime {
    fn sub_assign(&mut self, rhs: SimTime) {
        *self = *self - rhs;
    }
}

impl Sum for SimTime {
    fn sum<I: Iterator<Item = SimTime>>(iter: I) -> SimTime {
        iter.fold(SimTime::ZERO, |a, b| a + b)
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.0;
        if t == 0 {
            write!(f, "0s")
        } else if t % TICKS_PER_SEC == 0 {
            write!(f, "{}s", t / TICKS_PER_SEC)
        } else if t % TICKS_PER_MS == 0 {
            write!(f, "{}ms", t / TICKS_PER_MS)
        } else if t % TICKS_PER_US == 0 {
            write!(f, "{}us", t / TICKS_PER_US)
        } else if t % TICKS_PER_NS == 0 {
            write!(f, "{}ns", t / TICKS_PER_NS)
        } else {
            write!(f, "{t}ps")
        }
    }
}

#[derive(Debug, Error)]
pub enum TimeParseError {
    #[error("duration '{0}' is missing a unit suffix (ps|ns|us|ms|s)")]
    MissingUnit(String),
    #[error("duration '{0}' has an invalid numeric value")]
    BadNumber(String),
    #[error("duration '{0}' does not fit the tick range")]
    OutOfRange(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("channel rate must be positive")]
    ZeroRate,
}

/// Serialization time of `bytes` at `rate_bps`, rounded down to whole ticks.
pub fn transmission_time(bytes: u64, rate_bps: u64) -> Result<SimTime, RateError> {
    if rate_bps == 0 {
        return Err(RateError::ZeroRate);
    }
    let ticks = (bytes as u128 * 8 * TICKS_PER_SEC as u128) / rate_bps as u128;
    Ok(SimTime(u64::try_from(ticks).expect("transmission time overflow")))
}

/// Maximum granted window duration `Z / (threads * onus)` (floor division).
pub fn g_max(z: SimTime, threads: u32, onus: u32) -> SimTime {
    assert!(threads >= 1 && onus >= 1 && z > SimTime::ZERO);
    z.div(threads as u64 * onus as u64)
}

/// Exact ratio of two tick counts, rendered to six decimal places.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "fraction denominator must be positive");
        Fraction { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_time_zero_payload() {
        assert_eq!(transmission_time(0, 1_000_000_000).unwrap(), SimTime::ZERO);
    }

    #[test]
    fn transmission_time_64b_at_1g() {
        // 64 * 8 / 1e9 s = 512 ns
        assert_eq!(
            transmission_time(64, 1_000_000_000).unwrap(),
            SimTime::from_ps(512_000)
        );
    }

    #[test]
    fn transmission_time_1518b_at_10g() {
        // 1518 * 8 / 1e10 s = 1214.4 ns
        assert_eq!(
            transmission_time(1518, 10_000_000_000).unwrap(),
            SimTime::from_ps(1_214_400)
        );
    }

    #[test]
    fn transmission_time_zero_rate_rejected() {
        assert_eq!(transmission_time(1, 0), Err(RateError::ZeroRate));
    }

    #[test]
    fn transmission_time_is_additive() {
        let mut rng = 0x12345u64;
        for _ in 0..1000 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = rng >> 48;
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = rng >> 48;
            for rate in [1_000_000_000u64, 10_000_000_000] {
                let ta = transmission_time(a, rate).unwrap();
                let tb = transmission_time(b, rate).unwrap();
                let tab = transmission_time(a + b, rate).unwrap();
                assert_eq!(ta + tb, tab);
            }
        }
    }

    #[test]
    fn g_max_examples() {
        assert_eq!(g_max(SimTime::from_ms(4), 1, 32), SimTime::from_us(125));
        assert_eq!(
            g_max(SimTime::from_ms(4), 2, 32),
            SimTime::from_ps(62_500_000)
        );
        assert_eq!(g_max(SimTime::from_ms(8), 1, 1), SimTime::from_ms(8));
    }

    #[test]
    #[should_panic(expected = "underflow")]
    fn subtraction_underflow_panics() {
        let _ = SimTime::from_ns(1) - SimTime::from_ns(2);
    }

    #[test]
    fn align_up_frame_boundary() {
        let period = SimTime::from_us(125);
        assert_eq!(SimTime::from_us(130).align_up(period), SimTime::from_us(250));
        assert_eq!(SimTime::from_us(250).align_up(period), SimTime::from_us(250));
        assert_eq!(SimTime::ZERO.align_up(period), SimTime::ZERO);
    }

    #[test]
    fn parse_durations() {
        assert_eq!(SimTime::parse("30ns").unwrap(), SimTime::from_ns(30));
        assert_eq!(SimTime::parse("62.5us").unwrap(), SimTime::from_ps(62_500_000));
        assert_eq!(SimTime::parse("4ms").unwrap(), SimTime::from_ms(4));
        assert_eq!(SimTime::parse("60s").unwrap(), SimTime::from_secs(60));
        assert!(SimTime::parse("12").is_err());
        assert!(SimTime::parse("abcms").is_err());
    }

    #[test]
    fn fraction_render() {
        assert_eq!(Fraction::new(2, 3).to_string(), "0.666667");
    }
}
