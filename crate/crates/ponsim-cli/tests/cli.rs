use std::fs;
use std::process::Command;

fn ponsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ponsim"))
}

#[test]
fn analyze_prints_idle_reduction() {
    let out = ponsim()
        .args([
            "analyze",
            "--gamma-a=3.2ms",
            "--gamma-b=3.3ms",
            "--T=1.1ms",
            "--omega=4.35ms",
            "--tg=1us",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    // end: max(tg, 3.3+1.1-4.35) = 50us; beginning: max(tg, 3.2+1.1-4.35) masked -> 1us
    assert!(text.contains("idle_end       = 50us"), "{text}");
    assert!(text.contains("idle_beginning = 1us"), "{text}");
    assert!(text.contains("case           = partial"), "{text}");
    assert!(text.contains("delta_idle     = 49us"), "{text}");
}

#[test]
fn analyze_rejects_malformed_duration() {
    let out = ponsim()
        .args(["analyze", "--gamma-a=abc", "--gamma-b=1ms", "--T=1ms", "--omega=1ms", "--tg=1us"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_missing_config_is_io_error() {
    let out = ponsim()
        .args(["simulate", "--config", "/nonexistent/sweep.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_bad_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "standard = epon-9g\n").unwrap();
    let out = ponsim().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn simulate_writes_results_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "standard = epon-1g\n\
         range = 20km\n\
         onus = 4\n\
         z = 2ms\n\
         policy = offline-stp gated end\n\
         loads = 0.2\n\
         duration = 200ms\n\
         warmup = 20ms\n",
    )
    .unwrap();
    let out = ponsim()
        .args(["simulate", "--seed-base", "5", "--jobs", "1", "--plotdata", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let csv = dir.path().join("results_epon-1g_Z2.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "policy,reporting,load,mean_delay_s,ci_delay,mean_idle_s,ci_idle,mean_cycle_s,mean_window_s,seed_count,saturated"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("offline-stp-gated,end,0.2,"), "{row}");
    let dat = dir.path().join("fig_epon-1g_Z2_delay_offline-stp-gated_end.dat");
    let dat_text = fs::read_to_string(&dat).unwrap();
    assert_eq!(dat_text.lines().count(), 1);
    assert!(dat_text.starts_with("0.2 "), "{dat_text}");
}

#[test]
fn simulate_is_reproducible_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "standard = gpon-1g\n\
         range = 20km\n\
         onus = 4\n\
         z = 2ms\n\
         policy = online-stp limited end\n\
         loads = 0.3\n\
         duration = 150ms\n\
         warmup = 15ms\n",
    )
    .unwrap();
    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        fs::create_dir(&out_dir).unwrap();
        let out = ponsim()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
        texts.push(fs::read_to_string(out_dir.join("results_gpon-1g_Z2.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}
