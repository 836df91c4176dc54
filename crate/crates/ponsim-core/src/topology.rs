//! Network topology: ONU placement and one-way propagation delays.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::time::SimTime;

/// Propagation delay per kilometer of fiber (5 us/km).
pub const PROPAGATION_PER_KM: SimTime = SimTime::from_us(5);

/// Reserved ChaCha stream id for topology generation, so traffic substreams
/// (one per ONU source) never collide with it.
const TOPOLOGY_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeProfile {
    /// Splitter at 90 km, ONUs in the last 10 km; max round trip 1 ms.
    LongReach100km,
    /// Splitter at 18 km, ONUs in the last 2 km; max round trip 200 us.
    Standard20km,
}

impl RangeProfile {
    /// (min, max) one-way propagation delay for the placement band.
    pub fn tau_band(self) -> (SimTime, SimTime) {
        match self {
            RangeProfile::LongReach100km => (SimTime::from_us(450), SimTime::from_us(500)),
            RangeProfile::Standard20km => (SimTime::from_us(90), SimTime::from_us(100)),
        }
    }

    /// Configured round-trip bound: max over ONUs of 2*tau.
    pub fn round_trip_bound(self) -> SimTime {
        self.tau_band().1.mul(2)
    }

    pub fn token(self) -> &'static str {
        match self {
            RangeProfile::LongReach100km => "100km",
            RangeProfile::Standard20km => "20km",
        }
    }
}

impl FromStr for RangeProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "100km" => Ok(RangeProfile::LongReach100km),
            "20km" => Ok(RangeProfile::Standard20km),
            other => Err(format!("unknown range '{other}' (expected 100km|20km)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub num_onus: u32,
    /// One-way propagation delay per ONU, indexed by ONU.
    pub tau: Vec<SimTime>,
    pub range: RangeProfile,
}

impl Topology {
    /// Draws ONU placements from the run seed. Placement is uniform within
    /// the band; the farthest ONU is then pinned to the band edge so that
    /// max 2*tau equals the configured round-trip bound exactly.
    pub fn generate(num_onus: u32, range: RangeProfile, seed: u64) -> Topology {
        assert!(num_onus >= 1, "topology needs at least one ONU");
        let (lo, hi) = range.tau_band();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TOPOLOGY_STREAM);
        let mut tau: Vec<SimTime> = (0..num_onus)
            .map(|_| SimTime::from_ps(rng.gen_range(lo.as_ps()..=hi.as_ps())))
            .collect();
        let farthest = tau
            .iter()
            .enumerate()
            .max_by_key(|(i, t)| (**t, *i))
            .map(|(i, _)| i)
            .unwrap();
        tau[farthest] = hi;
        Topology {
            num_onus,
            tau,
            range,
        }
    }

    pub fn tau(&self, onu: u32) -> SimTime {
        self.tau[onu as usize]
    }

    pub fn max_round_trip(&self) -> SimTime {
        self.tau.iter().copied().max().unwrap().mul(2)
    }
}
