//! Batch experiment runner: line-oriented config parsing, load/policy/seed
//! sweeps, per-(standard, Z) results CSVs and per-curve plot data files.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dba::{DbaPolicy, Framework, PolicyError, Reporting, Sizing};
use crate::kernel::{run, RunConfig, RunError};
use crate::metrics::RunSummary;
use crate::profile::{PonProfile, Standard};
use crate::time::SimTime;
use crate::topology::RangeProfile;
use crate::traffic::TrafficConfig;

pub const DEFAULT_DURATION: SimTime = SimTime::from_secs(60);
pub const DEFAULT_MAX_DELIVERED: u64 = 2_000_000;
/// Queue-byte bound beyond which a run is flagged saturated.
pub const DEFAULT_SATURATION_BYTES: u64 = 50_000_000;
/// Maximum cycle lengths of the standard sweep; others are legal but logged.
pub const STANDARD_Z_MS: [u64; 3] = [2, 4, 8];

pub const RESULTS_HEADER: &str = "policy,reporting,load,mean_delay_s,ci_delay,\
mean_idle_s,ci_idle,mean_cycle_s,mean_window_s,seed_count,saturated";

/// One DBA mechanism of a sweep; combined with each configured Z at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolicySpec {
    pub framework: Framework,
    pub sizing: Sizing,
    pub reporting: Reporting,
}

impl PolicySpec {
    pub fn build(&self, z: SimTime) -> Result<DbaPolicy, PolicyError> {
        DbaPolicy::new(self.framework, self.sizing, self.reporting, z)
    }

    pub fn policy_token(&self) -> String {
        format!("{}-{}", self.framework.token(), self.sizing.token())
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub standard: Standard,
    pub z_values: Vec<SimTime>,
    pub num_onus: u32,
    pub range: RangeProfile,
    pub policies: Vec<PolicySpec>,
    /// Offered loads as fractions of the channel rate, each in (0, 1).
    pub loads: Vec<f64>,
    /// Explicit seeds; when empty, `replications` seeds are derived from the
    /// seed base.
    pub seeds: Vec<u64>,
    pub replications: u32,
    pub duration: SimTime,
    /// Defaults to 10% of the duration.
    pub warmup: Option<SimTime>,
    pub max_delivered: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn resolve_seeds(&self, seed_base: u64) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.replications as u64).map(|i| seed_base + i).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn warmup(&self) -> SimTime {
        self.warmup.unwrap_or_else(|| self.duration.div(10))
    }

    fn validate(&self, line_of: impl Fn(&str) -> usize) -> Result<(), ConfigError> {
        if self.policies.is_empty() {
            return Err(ConfigError::at(line_of("policy"), "at least one policy required"));
        }
        if self.loads.is_empty() {
            return Err(ConfigError::at(line_of("loads"), "at least one load required"));
        }
        if self.z_values.is_empty() {
            return Err(ConfigError::at(line_of("z"), "at least one cycle length required"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl fmt::Display) -> ConfigError {
        ConfigError {
            line,
            message: message.to_string(),
        }
    }
}

fn parse_list<T, E: fmt::Display>(
    value: &str,
    line: usize,
    f: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(|c| c == ',' || c == ' ')
        .filter(|s| !s.trim().is_empty())
        .map(|s| f(s.trim()).map_err(|e| ConfigError::at(line, e)))
        .collect()
}

/// Parses the line-oriented `key = value` experiment description. `#` starts
/// a comment; keys may repeat where accumulation makes sense (`policy`).
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut standard: Option<Standard> = None;
    let mut spec = ExperimentSpec {
        standard: Standard::Epon1G,
        z_values: vec![SimTime::from_ms(4)],
        num_onus: 32,
        range: RangeProfile::LongReach100km,
        policies: Vec::new(),
        loads: Vec::new(),
        seeds: Vec::new(),
        replications: 1,
        duration: DEFAULT_DURATION,
        warmup: None,
        max_delivered: Some(DEFAULT_MAX_DELIVERED),
        out_dir: None,
    };
    let mut key_lines: Vec<(String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(n, format!("expected `key = value`, got '{line}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(ConfigError::at(n, format!("empty value for '{key}'")));
        }
        key_lines.push((key.to_string(), n));
        match key {
            "standard" => {
                standard = Some(value.parse().map_err(|e| ConfigError::at(n, e))?);
            }
            "z" => {
                spec.z_values = parse_list(value, n, SimTime::parse)?;
                for z in &spec.z_values {
                    if z.is_zero() {
                        return Err(ConfigError::at(n, "cycle length must be positive"));
                    }
                    if !STANDARD_Z_MS.iter().any(|ms| *z == SimTime::from_ms(*ms)) {
                        log::warn!("line {n}: cycle length {z} outside the standard 2/4/8 ms sweep");
                    }
                }
            }
            "onus" => {
                let o: u32 = value.parse().map_err(|e| ConfigError::at(n, e))?;
                if o == 0 {
                    return Err(ConfigError::at(n, "onus must be at least 1"));
                }
                spec.num_onus = o;
            }
            "range" => spec.range = value.parse().map_err(|e| ConfigError::at(n, e))?,
            "policy" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(ConfigError::at(
                        n,
                        "expected `policy = <framework> <sizing> <reporting>`",
                    ));
                }
                let ps = PolicySpec {
                    framework: parts[0].parse().map_err(|e| ConfigError::at(n, e))?,
                    sizing: parts[1].parse().map_err(|e| ConfigError::at(n, e))?,
                    reporting: parts[2].parse().map_err(|e| ConfigError::at(n, e))?,
                };
                // surface invalid combinations at parse time with the line
                ps.build(SimTime::from_ms(1)).map_err(|e| ConfigError::at(n, e))?;
                spec.policies.push(ps);
            }
            "loads" => {
                spec.loads = parse_list(value, n, f64::from_str)?;
                if spec.loads.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                    return Err(ConfigError::at(n, "loads must lie strictly between 0 and 1"));
                }
            }
            "seeds" => spec.seeds = parse_list(value, n, u64::from_str)?,
            "replications" => {
                spec.replications = value.parse().map_err(|e| ConfigError::at(n, e))?;
                if spec.replications == 0 {
                    return Err(ConfigError::at(n, "replications must be at least 1"));
                }
            }
            "duration" => {
                spec.duration = SimTime::parse(value).map_err(|e| ConfigError::at(n, e))?;
            }
            "warmup" => {
                spec.warmup = Some(SimTime::parse(value).map_err(|e| ConfigError::at(n, e))?);
            }
            "max_delivered" => {
                let v: u64 = value.parse().map_err(|e| ConfigError::at(n, e))?;
                spec.max_delivered = if v == 0 { None } else { Some(v) };
            }
            "out" => spec.out_dir = Some(PathBuf::from(value)),
            other => {
                return Err(ConfigError::at(n, format!("unknown key '{other}'")));
            }
        }
    }
    let Some(standard) = standard else {
        return Err(ConfigError::at(0, "missing required key 'standard'"));
    };
    spec.standard = standard;
    let line_of = |key: &str| {
        key_lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    };
    spec.validate(line_of)?;
    Ok(spec)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("results file {path} is malformed: {message}")]
    Schema { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Z rendered in milliseconds with trailing zeros trimmed: 4 ms -> "4",
/// 2.5 ms -> "2.5".
pub fn z_label(z: SimTime) -> String {
    let ms = z.as_ps() as f64 / 1e9;
    if ms == ms.trunc() {
        format!("{}", ms as u64)
    } else {
        format!("{ms}")
    }
}

#[derive(Clone, Debug)]
struct ResultRow {
    policy: String,
    reporting: String,
    load: f64,
    summary: RunSummary,
}

fn fmt_s(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.8e}")
    }
}

fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    let mut out = Vec::new();
    writeln!(out, "{RESULTS_HEADER}").unwrap();
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.reporting,
            r.load,
            fmt_s(s.mean_delay_s),
            fmt_s(s.ci_delay),
            fmt_s(s.mean_idle_s),
            fmt_s(s.ci_idle),
            fmt_s(s.mean_cycle_s),
            fmt_s(s.mean_window_s),
            s.seed_count,
            u8::from(s.saturated)
        )
        .unwrap();
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Runs the full sweep and writes one results CSV per configured Z. Cells
/// (policy x load x seed) are independent simulations and run in parallel.
pub fn run_experiment(
    spec: &ExperimentSpec,
    seed_base: u64,
    jobs: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let seeds = spec.resolve_seeds(seed_base);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("worker pool");
    let mut written = Vec::new();
    for &z in &spec.z_values {
        let mut cells: Vec<(PolicySpec, f64)> = Vec::new();
        for pol in &spec.policies {
            for &load in &spec.loads {
                cells.push((*pol, load));
            }
        }
        let runs: Result<Vec<ResultRow>, ExperimentError> = pool.install(|| {
            cells
                .par_iter()
                .map(|&(pol, load)| {
                    let per_seed: Result<Vec<RunSummary>, ExperimentError> = seeds
                        .par_iter()
                        .map(|&seed| run_cell(spec, z, &pol, load, seed))
                        .collect();
                    Ok(ResultRow {
                        policy: pol.policy_token(),
                        reporting: pol.reporting.token().to_string(),
                        load,
                        summary: RunSummary::combine(&per_seed?),
                    })
                })
                .collect()
        });
        let mut rows = runs?;
        rows.sort_by(|a, b| {
            (&a.policy, &a.reporting)
                .cmp(&(&b.policy, &b.reporting))
                .then(a.load.total_cmp(&b.load))
        });
        let path = out_dir.join(format!(
            "results_{}_Z{}.csv",
            spec.standard.token(),
            z_label(z)
        ));
        write_results_csv(&rows, &path)?;
        written.push(path);
    }
    Ok(written)
}

fn run_cell(
    spec: &ExperimentSpec,
    z: SimTime,
    pol: &PolicySpec,
    load: f64,
    seed: u64,
) -> Result<RunSummary, ExperimentError> {
    let policy = pol.build(z)?;
    let rate = PonProfile::for_standard(spec.standard).rate_bps;
    let load_bps = (load * rate as f64).round() as u64;
    let mut cfg = RunConfig::new(
        spec.standard,
        spec.range,
        spec.num_onus,
        policy,
        TrafficConfig::new(load_bps, seed),
        spec.duration,
        spec.warmup(),
    );
    cfg.max_delivered = spec.max_delivered;
    cfg.saturation_bytes = Some(DEFAULT_SATURATION_BYTES);
    log::info!(
        "run {} {} load {} seed {}: Z {}",
        spec.standard.token(),
        pol.policy_token(),
        load,
        seed,
        z
    );
    Ok(run(&cfg)?.summary)
}

/// Splits a results CSV into per-curve `load mean ci` files, one per
/// (metric, policy, reporting). The standard/Z tag of the file names comes
/// from the CSV file name (`results_<tag>.csv`).
pub fn emit_plotdata(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let text = fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != RESULTS_HEADER {
        return Err(ExperimentError::Schema {
            path: csv_path.to_path_buf(),
            message: format!("unexpected header '{header}'"),
        });
    }
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let tag = stem.strip_prefix("results_").unwrap_or(stem);
    // curve key -> rows, insertion-ordered
    let mut curves: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(ExperimentError::Schema {
                path: csv_path.to_path_buf(),
                message: format!("row {} has {} fields, expected 11", idx + 2, f.len()),
            });
        }
        let parse = |s: &str| -> Result<f64, ExperimentError> {
            s.parse().map_err(|_| ExperimentError::Schema {
                path: csv_path.to_path_buf(),
                message: format!("row {}: bad number '{s}'", idx + 2),
            })
        };
        let load = parse(f[2])?;
        for (metric, mean, ci) in [("delay", f[3], f[4]), ("idle", f[5], f[6])] {
            let key = format!("fig_{tag}_{metric}_{}_{}", f[0], f[1]);
            let point = (load, parse(mean)?, parse(ci)?);
            match curves.iter_mut().find(|(k, _)| *k == key) {
                Some((_, rows)) => rows.push(point),
                None => curves.push((key, vec![point])),
            }
        }
    }
    if curves.is_empty() {
        log::warn!("{}: no data rows, no plot files written", csv_path.display());
        return Ok(Vec::new());
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    for (key, rows) in curves {
        let path = out_dir.join(format!("{key}.dat"));
        let mut out = Vec::new();
        for (load, mean, ci) in rows {
            writeln!(out, "{} {} {}", load, fmt_s(mean), fmt_s(ci)).unwrap();
        }
        fs::write(&path, out).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse_config(
            "standard = epon-1g\n\
             policy = offline-stp gated end\n\
             loads = 0.5\n",
        )
        .unwrap();
        assert_eq!(spec.standard, Standard::Epon1G);
        assert_eq!(spec.num_onus, 32);
        assert_eq!(spec.range, RangeProfile::LongReach100km);
        assert_eq!(spec.z_values, vec![SimTime::from_ms(4)]);
        assert_eq!(spec.duration, SimTime::from_secs(60));
        assert_eq!(spec.warmup(), SimTime::from_secs(6));
        assert_eq!(spec.max_delivered, Some(2_000_000));
        assert_eq!(spec.resolve_seeds(7), vec![7]);
    }

    #[test]
    fn comments_lists_and_repeats() {
        let spec = parse_config(
            "# sweep\n\
             standard = gpon-10g\n\
             z = 2ms, 4ms 8ms\n\
             onus = 8\n\
             range = 20km\n\
             policy = offline-stp limited end\n\
             policy = dpp excess-share optimized  # cross-group sharing\n\
             loads = 0.1, 0.5, 0.9\n\
             seeds = 3 5 8\n",
        )
        .unwrap();
        assert_eq!(spec.z_values.len(), 3);
        assert_eq!(spec.policies.len(), 2);
        assert_eq!(spec.loads, vec![0.1, 0.5, 0.9]);
        assert_eq!(spec.resolve_seeds(1), vec![3, 5, 8]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("standard = epon-1g\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("bogus"));

        let err = parse_config(
            "standard = epon-1g\n\
             policy = online-stp excess optimized\n\
             loads = 0.5\n",
        )
        .unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("offline"), "{}", err.message);

        let err = parse_config("standard = epon-1g\npolicy = offline-stp gated end\n").unwrap_err();
        assert!(err.message.contains("load"));

        let err = parse_config(
            "standard = epon-1g\npolicy = offline-stp gated end\nloads = 1.5\n",
        )
        .unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn nonstandard_z_accepted() {
        let spec = parse_config(
            "standard = epon-1g\nz = 3ms\npolicy = offline-stp gated end\nloads = 0.5\n",
        )
        .unwrap();
        assert_eq!(spec.z_values, vec![SimTime::from_ms(3)]);
    }

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = parse_config(
            "standard = epon-1g\n\
             z = 2ms\n\
             onus = 2\n\
             range = 20km\n\
             policy = offline-stp limited end\n\
             policy = offline-stp limited beginning\n\
             loads = 0.3, 0.6\n\
             replications = 2\n\
             duration = 30ms\n\
             warmup = 5ms\n",
        )
        .unwrap();
        spec.max_delivered = None;
        spec
    }

    #[test]
    fn sweep_is_deterministic_and_sorted() {
        let spec = tiny_spec();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let files_a = run_experiment(&spec, 1, Some(1), dir_a.path()).unwrap();
        let files_b = run_experiment(&spec, 1, Some(2), dir_b.path()).unwrap();
        assert_eq!(files_a.len(), 1);
        assert!(files_a[0].ends_with("results_epon-1g_Z2.csv"));
        let a = fs::read(&files_a[0]).unwrap();
        let b = fs::read(&files_b[0]).unwrap();
        assert_eq!(a, b, "same seeds must give identical bytes");
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER);
        let rows: Vec<Vec<String>> = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        assert_eq!(rows.len(), 4);
        // sorted by (policy, reporting, load); seed_count merged
        let keys: Vec<(String, String, String)> = rows
            .iter()
            .map(|r| (r[0].clone(), r[1].clone(), r[2].clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for r in &rows {
            assert_eq!(r[9], "2");
            assert_eq!(r[10], "0");
        }
    }

    #[test]
    fn plotdata_files_per_curve() {
        let spec = tiny_spec();
        let dir = tempfile::tempdir().unwrap();
        let files = run_experiment(&spec, 1, Some(1), dir.path()).unwrap();
        let out = dir.path().join("plot");
        let dats = emit_plotdata(&files[0], &out).unwrap();
        // 2 curves x 2 metrics
        assert_eq!(dats.len(), 4);
        let names: Vec<String> = dats
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert!(names.contains(&"fig_epon-1g_Z2_delay_offline-stp-limited_end.dat".to_string()));
        assert!(names.contains(&"fig_epon-1g_Z2_idle_offline-stp-limited_beginning.dat".to_string()));
        for p in &dats {
            let text = fs::read_to_string(p).unwrap();
            let rows: Vec<&str> = text.lines().collect();
            assert_eq!(rows.len(), 2, "{p:?}");
            for row in rows {
                assert_eq!(row.split(' ').count(), 3);
            }
        }
    }

    #[test]
    fn empty_csv_yields_no_plot_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("results_x_Z4.csv");
        fs::write(&csv, format!("{RESULTS_HEADER}\n")).unwrap();
        let dats = emit_plotdata(&csv, dir.path()).unwrap();
        assert!(dats.is_empty());
    }

    #[test]
    fn bad_header_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("results_x_Z4.csv");
        fs::write(&csv, "nope\n").unwrap();
        assert!(matches!(
            emit_plotdata(&csv, dir.path()),
            Err(ExperimentError::Schema { .. })
        ));
    }

    #[test]
    fn z_labels() {
        assert_eq!(z_label(SimTime::from_ms(4)), "4");
        assert_eq!(z_label(SimTime::from_us(2500)), "2.5");
    }
}
