use std::process::Command;

fn pseudoloc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudoloc"))
}

#[test]
fn decay_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "kernel = hilbert1d\np = 2, 3\ns = 0..3\nfamily_size = 3\nseed = 11\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let status = pseudoloc()
            .arg("decay")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    // header plus 2 exponents × 3 functions × 4 values of s
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn overrides_win_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "p = 2\ns = 0..2\nfamily_size = 2\n").unwrap();
    let out = pseudoloc()
        .args(["decay", "--set", "p=4", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let p = |l: &str| l.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    assert!(text.lines().skip(1).all(|l| p(l) == 4.0), "{text}");
}

#[test]
fn bad_config_is_an_invariant_failure() {
    let out = pseudoloc()
        .args(["decay", "--set", "p=0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = pseudoloc()
        .args(["decay", "--set", "profile=nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn checks_report_pass() {
    let out = pseudoloc()
        .args([
            "haar-check",
            "--instances",
            "50",
            "--sigma-cases",
            "20",
            "--trials",
            "20",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("PASS")));
    assert!(!text.contains("FAIL"), "{text}");

    let out = pseudoloc()
        .args(["kernel-check", "--samples", "64"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sigma_dump_of_one_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.txt");
    std::fs::write(&path, "# h on [0, 1)\n0:(0) eta=1 alpha=1\n").unwrap();
    let out = pseudoloc()
        .arg("sigma-dump")
        .arg("--expansion")
        .arg(&path)
        .args(["--s", "1"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // Ω_{-1} = [0, 2), so Σ = 9·[0, 2) = [-8, 10)
    assert!(text.contains("9-omega -1: -1:(-4) "), "{text}");
    assert!(text.lines().any(|l| l == "measure 18.0000000000"), "{text}");
}
