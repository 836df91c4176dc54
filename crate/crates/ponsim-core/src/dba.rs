//! Dynamic bandwidth allocation: policy selection, scheduling instants,
//! grant sizing (gated / limited / excess / excess-share) and report
//! position selection.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::profile::PonProfile;
use crate::time::{g_max, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Framework {
    OfflineStp,
    Dpp,
    OnlineStp,
    OnlineMtp,
}

impl Framework {
    pub fn is_offline(self) -> bool {
        matches!(self, Framework::OfflineStp | Framework::Dpp)
    }

    pub fn token(self) -> &'static str {
        match self {
            Framework::OfflineStp => "offline-stp",
            Framework::Dpp => "dpp",
            Framework::OnlineStp => "online-stp",
            Framework::OnlineMtp => "online-mtp",
        }
    }
}

impl FromStr for Framework {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "offline-stp" => Ok(Framework::OfflineStp),
            "dpp" => Ok(Framework::Dpp),
            "online-stp" => Ok(Framework::OnlineStp),
            "online-mtp" => Ok(Framework::OnlineMtp),
            other => Err(format!(
                "unknown framework '{other}' (expected offline-stp|dpp|online-stp|online-mtp)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sizing {
    Gated,
    Limited,
    Excess,
    ExcessShare,
}

impl Sizing {
    pub fn token(self) -> &'static str {
        match self {
            Sizing::Gated => "gated",
            Sizing::Limited => "limited",
            Sizing::Excess => "excess",
            Sizing::ExcessShare => "excess-share",
        }
    }
}

impl FromStr for Sizing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gated" => Ok(Sizing::Gated),
            "limited" => Ok(Sizing::Limited),
            "excess" => Ok(Sizing::Excess),
            "excess-share" => Ok(Sizing::ExcessShare),
            other => Err(format!(
                "unknown sizing '{other}' (expected gated|limited|excess|excess-share)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reporting {
    End,
    Beginning,
    Optimized,
}

impl Reporting {
    pub fn token(self) -> &'static str {
        match self {
            Reporting::End => "end",
            Reporting::Beginning => "beginning",
            Reporting::Optimized => "optimized",
        }
    }
}

impl FromStr for Reporting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "end" => Ok(Reporting::End),
            "beginning" => Ok(Reporting::Beginning),
            "optimized" => Ok(Reporting::Optimized),
            other => Err(format!(
                "unknown reporting '{other}' (expected end|beginning|optimized)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("excess-share sizing is defined only for double-phase polling")]
    ExcessShareNeedsDpp,
    #[error(
        "optimized reporting needs offline scheduling (offline-stp or dpp): with online \
         scheduling the reporting position would have to be signaled before the idle-time \
         parameters are known at the OLT"
    )]
    OptimizedNeedsOffline,
    #[error("maximum cycle length must be positive")]
    ZeroCycle,
}

/// One of the DBA mechanisms: scheduling framework x grant sizing x
/// reporting position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbaPolicy {
    pub framework: Framework,
    pub sizing: Sizing,
    pub reporting: Reporting,
    /// Polling threads; 2 for online MTP, 1 otherwise.
    pub threads: u8,
    /// Maximum aggregate cycle duration Z.
    pub max_cycle: SimTime,
    /// Thread-tuning threshold. Carried in the configuration but inert: the
    /// tuning algorithm itself is outside the model.
    pub t_tune: u32,
}

pub const DEFAULT_T_TUNE: u32 = 5;

impl DbaPolicy {
    pub fn new(
        framework: Framework,
        sizing: Sizing,
        reporting: Reporting,
        max_cycle: SimTime,
    ) -> Result<DbaPolicy, PolicyError> {
        if max_cycle.is_zero() {
            return Err(PolicyError::ZeroCycle);
        }
        if sizing == Sizing::ExcessShare && framework != Framework::Dpp {
            return Err(PolicyError::ExcessShareNeedsDpp);
        }
        if reporting == Reporting::Optimized && !framework.is_offline() {
            return Err(PolicyError::OptimizedNeedsOffline);
        }
        let threads = if framework == Framework::OnlineMtp { 2 } else { 1 };
        Ok(DbaPolicy {
            framework,
            sizing,
            reporting,
            threads,
            max_cycle,
            t_tune: DEFAULT_T_TUNE,
        })
    }

    /// Per-thread grant cap G_max = Z / (threads * O).
    pub fn g_max(&self, onus: u32) -> SimTime {
        g_max(self.max_cycle, self.threads as u32, onus)
    }

    /// Size of the first DPP group (slots 1..=this). Odd O rounds up.
    pub fn dpp_group1(onus: u32) -> u32 {
        onus.div_ceil(2)
    }
}

impl fmt::Display for DbaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            self.framework.token(),
            self.sizing.token()
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("report from slot {missing} of the previous cycle not yet received")]
    NotReady { missing: u32 },
}

/// Scheduling instant for the grant of slot `j` given the decode instants of
/// the previous cycle's reports (per thread). `decoded[s]` is the instant
/// the report of slot s+1 was completely received, if it has been.
///
/// The decode instants already reflect the reporting position (start of
/// burst + report time for beginning, end of burst for end), so one rule
/// per framework covers both columns of the instant table.
pub fn scheduling_instant(
    framework: Framework,
    onus: u32,
    j: u32,
    decoded: &[Option<SimTime>],
) -> Result<SimTime, ScheduleError> {
    debug_assert_eq!(decoded.len(), onus as usize);
    debug_assert!((1..=onus).contains(&j));
    let gating_slot = match framework {
        Framework::OfflineStp => onus,
        Framework::Dpp => {
            let g1 = DbaPolicy::dpp_group1(onus);
            if j <= g1 {
                g1
            } else {
                onus
            }
        }
        Framework::OnlineStp | Framework::OnlineMtp => j,
    };
    decoded[gating_slot as usize - 1].ok_or(ScheduleError::NotReady {
        missing: gating_slot,
    })
}

/// Gated window: full reported demand plus room for the next report.
pub fn size_gated(reported_bytes: u64, profile: &PonProfile) -> SimTime {
    profile.tx_time(reported_bytes) + profile.report_time
}

/// Limited window: gated demand capped at G_max.
pub fn size_limited(reported_bytes: u64, g_max: SimTime, profile: &PonProfile) -> SimTime {
    debug_assert!(g_max > profile.report_time);
    size_gated(reported_bytes, profile).min(g_max)
}

/// Excess distribution over one scheduling group.
///
/// Every ONU is granted at most its demand. ONUs below G_max donate their
/// unused share to a pool that is spread over the overloaded ONUs in
/// iterative equal portions (capped at each demand) until the pool is
/// exhausted or everyone is satisfied. Converges to capped water-filling;
/// remainder ticks go to the lowest-indexed unsatisfied ONUs.
pub fn distribute_excess(demands: &[SimTime], g_max: SimTime) -> Vec<SimTime> {
    distribute_excess_with_pool(demands, g_max, SimTime::ZERO).0
}

/// Excess distribution with an extra pool contribution (DPP share
/// mechanism). Returns the grants and the leftover pool.
pub fn distribute_excess_with_pool(
    demands: &[SimTime],
    g_max: SimTime,
    extra_pool: SimTime,
) -> (Vec<SimTime>, SimTime) {
    let mut grants: Vec<SimTime> = demands.iter().map(|d| (*d).min(g_max)).collect();
    let mut pool = extra_pool
        + demands
            .iter()
            .map(|d| g_max.saturating_sub(*d))
            .sum::<SimTime>();
    loop {
        let unsat: Vec<usize> = (0..demands.len())
            .filter(|&i| grants[i] < demands[i])
            .collect();
        if unsat.is_empty() || pool.is_zero() {
            break;
        }
        let share = pool.div(unsat.len() as u64);
        if share.is_zero() {
            // fewer ticks than claimants: one tick each, lowest index first
            for &i in unsat.iter().take(pool.as_ps() as usize) {
                grants[i] += SimTime::from_ps(1);
            }
            pool = SimTime::ZERO;
            break;
        }
        for &i in &unsat {
            let gap = demands[i] - grants[i];
            let give = share.min(gap);
            grants[i] += give;
            pool -= give;
        }
    }
    (grants, pool)
}

/// Per-slot reporting position under dynamic optimization: only the slots
/// whose report gates the next scheduling decision move to the beginning.
pub fn optimized_reporting_position(
    framework: Framework,
    j: u32,
    onus: u32,
) -> Result<Reporting, PolicyError> {
    match framework {
        Framework::OfflineStp => Ok(if j == onus {
            Reporting::Beginning
        } else {
            Reporting::End
        }),
        Framework::Dpp => {
            let g1 = DbaPolicy::dpp_group1(onus);
            Ok(if j == g1 || j == onus {
                Reporting::Beginning
            } else {
                Reporting::End
            })
        }
        Framework::OnlineStp | Framework::OnlineMtp => Err(PolicyError::OptimizedNeedsOffline),
    }
}

/// Resolves the effective report position for one slot.
pub fn slot_reporting(policy: &DbaPolicy, j: u32, onus: u32) -> Reporting {
    match policy.reporting {
        Reporting::Optimized => {
            optimized_reporting_position(policy.framework, j, onus).expect("validated policy")
        }
        fixed => fixed,
    }
}
