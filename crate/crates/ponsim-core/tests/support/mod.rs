//! Independent oracles for the integration suites: a sort-based
//! water-filling implementation of excess distribution and a variance-time
//! Hurst estimator.

use ponsim_core::time::SimTime;

/// Closed-form capped water-filling: every ONU gets at most its demand,
/// surplus below the cap (plus `extra`) raises the overloaded ONUs to a
/// common fill level found by binary search; remainder ticks go to the
/// lowest-indexed still-unsatisfied ONUs. Returns (grants, leftover).
pub fn waterfill_excess(
    demands: &[SimTime],
    g_max: SimTime,
    extra: SimTime,
) -> (Vec<SimTime>, SimTime) {
    let g = g_max.as_ps();
    let gaps: Vec<u64> = demands
        .iter()
        .map(|d| d.as_ps().saturating_sub(g))
        .collect();
    let pool: u64 = extra.as_ps()
        + demands
            .iter()
            .map(|d| g.saturating_sub(d.as_ps()))
            .sum::<u64>();
    let total_gap: u64 = gaps.iter().sum();
    if pool >= total_gap {
        return (demands.to_vec(), SimTime::from_ps(pool - total_gap));
    }
    let fill = |lvl: u64| gaps.iter().map(|&gp| gp.min(lvl) as u128).sum::<u128>();
    let (mut lo, mut hi) = (0u64, *gaps.iter().max().unwrap());
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if fill(mid) <= pool as u128 {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut rem = pool - fill(lo) as u64;
    let grants = demands
        .iter()
        .zip(&gaps)
        .map(|(d, &gp)| {
            let mut give = gp.min(lo);
            if gp > lo && rem > 0 {
                give += 1;
                rem -= 1;
            }
            SimTime::from_ps(d.as_ps().min(g) + give)
        })
        .collect();
    (grants, SimTime::ZERO)
}

/// Variance-time Hurst estimate: least-squares slope of
/// `log Var(block mean)` against `log block size`; H = 1 + slope/2.
pub fn hurst_variance_time(counts: &[f64], scales: &[usize]) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in scales {
        let blocks: Vec<f64> = counts
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        assert!(blocks.len() >= 10, "scale {m} leaves too few blocks");
        let mean = blocks.iter().sum::<f64>() / blocks.len() as f64;
        let var = blocks.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / blocks.len() as f64;
        assert!(var > 0.0);
        xs.push((m as f64).ln());
        ys.push(var.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    1.0 + (sxy / sxx) / 2.0
}
