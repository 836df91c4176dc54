//! Browser bindings for the PON upstream DBA toolkit.
//!
//! Three operations back the demo page: closed-form idle analysis of a
//! single burst, idle/utilization curves over a cycle-length sweep, and a
//! short in-browser simulation run. Everything crosses the boundary as
//! JSON strings so the page needs no generated JS glue beyond wasm-bindgen.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ponsim_core::dba::{DbaPolicy, Framework, Reporting, Sizing};
use ponsim_core::idle::{
    approx_mean_idle_offline, delta_idle, idle_time, utilization_limit, IdleInputs,
};
use ponsim_core::kernel::{run, RunConfig};
use ponsim_core::profile::{PonProfile, Standard};
use ponsim_core::time::SimTime;
use ponsim_core::topology::RangeProfile;
use ponsim_core::traffic::TrafficConfig;

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

fn ok_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(err_json)
}

fn us(t: SimTime) -> f64 {
    t.as_secs_f64() * 1e6
}

#[derive(Serialize)]
struct IdleAnalysis {
    idle_end_us: f64,
    idle_beginning_us: f64,
    case: &'static str,
    delta_us: f64,
}

/// Idle-time reduction of moving one burst's report from the end to the
/// beginning. All inputs are in microseconds.
#[wasm_bindgen]
pub fn analyze_idle(gamma_a_us: f64, gamma_b_us: f64, t_us: f64, omega_us: f64, tg_us: f64) -> String {
    let pico = |v: f64| -> Result<SimTime, String> {
        if !v.is_finite() || v < 0.0 || v > 1e12 {
            return Err(format!("value {v} out of range"));
        }
        Ok(SimTime::from_ps((v * 1e6) as u64))
    };
    let inputs = match (|| -> Result<IdleInputs, String> {
        Ok(IdleInputs {
            gamma_begin: pico(gamma_a_us)?,
            gamma_end: pico(gamma_b_us)?,
            gate_delay: pico(t_us)?,
            omega: pico(omega_us)?,
            guard: pico(tg_us)?,
        })
    })() {
        Ok(i) => i,
        Err(e) => return err_json(e),
    };
    let (case, delta) = match delta_idle(&inputs) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    ok_json(&IdleAnalysis {
        idle_end_us: us(idle_time(inputs.gamma_end, inputs.gate_delay, inputs.omega, inputs.guard)),
        idle_beginning_us: us(idle_time(
            inputs.gamma_begin,
            inputs.gate_delay,
            inputs.omega,
            inputs.guard,
        )),
        case: case.name(),
        delta_us: us(delta),
    })
}

#[derive(Serialize)]
struct CurvePoint {
    z_ms: f64,
    idle_end_us: f64,
    idle_beginning_us: f64,
    limit_end: f64,
    limit_beginning: f64,
    over_masked: bool,
}

#[derive(Serialize)]
struct Curves {
    round_trip_us: f64,
    points: Vec<CurvePoint>,
}

/// Approximate offline mean idle time and utilization limits for end vs
/// beginning reporting, swept over cycle lengths `z_min_ms..=z_max_ms`.
#[wasm_bindgen]
pub fn idle_curves(range: &str, onus: u32, z_min_ms: f64, z_max_ms: f64, steps: u32) -> String {
    let range: RangeProfile = match range.parse() {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    if onus == 0 || steps < 2 || !(z_min_ms > 0.0) || !(z_max_ms > z_min_ms) || z_max_ms > 1e3 {
        return err_json("need onus >= 1, steps >= 2, 0 < z_min < z_max <= 1000 ms");
    }
    let tau_max = range.tau_band().1;
    let mut points = Vec::with_capacity(steps as usize);
    for i in 0..steps {
        let z_ms = z_min_ms + (z_max_ms - z_min_ms) * i as f64 / (steps - 1) as f64;
        let z = SimTime::from_ps((z_ms * 1e9) as u64);
        let g_max = ponsim_core::time::g_max(z, 1, onus);
        let (idle_end, _) = approx_mean_idle_offline(Reporting::End, tau_max, onus, g_max);
        let (idle_beg, over) =
            approx_mean_idle_offline(Reporting::Beginning, tau_max, onus, g_max);
        points.push(CurvePoint {
            z_ms,
            idle_end_us: us(idle_end),
            idle_beginning_us: us(idle_beg),
            limit_end: utilization_limit(Reporting::End, z, tau_max, g_max).to_f64(),
            limit_beginning: utilization_limit(Reporting::Beginning, z, tau_max, g_max).to_f64(),
            over_masked: over,
        });
    }
    ok_json(&Curves {
        round_trip_us: us(tau_max.mul(2)),
        points,
    })
}

#[derive(Serialize)]
struct SimResult {
    mean_delay_ms: f64,
    ci_delay_ms: f64,
    mean_idle_us: f64,
    ci_idle_us: f64,
    mean_cycle_ms: f64,
    delivered: u64,
    saturated: bool,
}

/// Runs a short simulation in the browser and returns the summary.
/// `duration_ms` is capped at 5000 to keep the page responsive.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_short(
    standard: &str,
    range: &str,
    onus: u32,
    framework: &str,
    sizing: &str,
    reporting: &str,
    z_ms: f64,
    load: f64,
    duration_ms: f64,
    seed: u64,
) -> String {
    let parsed = (|| -> Result<RunConfig, String> {
        let standard: Standard = standard.parse().map_err(|e: String| e)?;
        let range: RangeProfile = range.parse()?;
        let framework: Framework = framework.parse()?;
        let sizing: Sizing = sizing.parse()?;
        let reporting: Reporting = reporting.parse()?;
        if !(0.0..1.0).contains(&load) {
            return Err(format!("load {load} outside (0, 1)"));
        }
        if !(0.1..=1e3).contains(&z_ms) {
            return Err(format!("cycle length {z_ms} ms outside [0.1, 1000]"));
        }
        if !(10.0..=5000.0).contains(&duration_ms) {
            return Err(format!("duration {duration_ms} ms outside [10, 5000]"));
        }
        let policy = DbaPolicy::new(framework, sizing, reporting, SimTime::from_ps((z_ms * 1e9) as u64))
            .map_err(|e| e.to_string())?;
        let rate = PonProfile::for_standard(standard).rate_bps;
        let duration = SimTime::from_ps((duration_ms * 1e9) as u64);
        Ok(RunConfig::new(
            standard,
            range,
            onus,
            policy,
            TrafficConfig::new((load * rate as f64) as u64, seed),
            duration,
            duration.div(10),
        ))
    })();
    let cfg = match parsed {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    match run(&cfg) {
        Ok(out) => ok_json(&SimResult {
            mean_delay_ms: out.summary.mean_delay_s * 1e3,
            ci_delay_ms: out.summary.ci_delay * 1e3,
            mean_idle_us: out.summary.mean_idle_s * 1e6,
            ci_idle_us: out.summary.ci_idle * 1e6,
            mean_cycle_ms: out.summary.mean_cycle_s * 1e3,
            delivered: out.delivered,
            saturated: out.saturated,
        }),
        Err(e) => err_json(e),
    }
}
