//! Cross-checks of the production algorithms against the independent
//! oracle implementations in `support`.

mod support;

use ponsim_core::dba::distribute_excess_with_pool;
use ponsim_core::time::SimTime;
use rand::SeedableRng;

#[test]
fn excess_distribution_matches_waterfilling() {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
    for case in 0..2000 {
        let n = rng.gen_range(1..=40);
        let g = SimTime::from_ps(rng.gen_range(1_000..200_000_000));
        let demands: Vec<SimTime> = (0..n)
            .map(|_| {
                // mix of zero, sub-cap, and overloaded demands
                match rng.gen_range(0..4) {
                    0 => SimTime::ZERO,
                    1 => SimTime::from_ps(rng.gen_range(0..=g.as_ps())),
                    _ => SimTime::from_ps(rng.gen_range(0..4 * g.as_ps())),
                }
            })
            .collect();
        let extra = if rng.gen_bool(0.5) {
            SimTime::from_ps(rng.gen_range(0..2 * g.as_ps()))
        } else {
            SimTime::ZERO
        };
        let got = distribute_excess_with_pool(&demands, g, extra);
        let want = support::waterfill_excess(&demands, g, extra);
        assert_eq!(got, want, "case {case}: demands {demands:?} cap {g} extra {extra}");
        // conservation: base grants plus pool equals grants plus leftover
        let granted: u64 = got.0.iter().map(|t| t.as_ps()).sum();
        let capped: u64 = demands.iter().map(|d| d.as_ps().min(g.as_ps())).sum();
        let pool = extra.as_ps()
            + demands
                .iter()
                .map(|d| g.as_ps().saturating_sub(d.as_ps()))
                .sum::<u64>();
        assert_eq!(granted + got.1.as_ps(), capped + pool);
    }
}

#[test]
fn variance_time_slope_of_iid_noise_is_half() {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let counts: Vec<f64> = (0..200_000).map(|_| rng.gen_range(0.0..1.0)).collect();
    let h = support::hurst_variance_time(&counts, &[16, 32, 64, 128, 256, 512]);
    assert!((h - 0.5).abs() < 0.05, "H estimate {h} for iid noise");
}
