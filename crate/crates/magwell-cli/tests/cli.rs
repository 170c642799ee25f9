use std::process::{Command, Output};

fn magwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magwell")).args(args).output().expect("running magwell")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_as_json() {
    let o = magwell(&["constants", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let s = v["s"].as_f64().unwrap();
    assert!((s - 11.501456902108742).abs() < 1e-10, "{s}");
}

#[test]
fn constants_csv_goes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let o = magwell(&["constants", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# schema=1\nname,value\n"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("c,1.21841524")), "{text}");
}

#[test]
fn invalid_config_lists_every_problem_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "profile.b0 = x\nprofile.nope = 1\njobs = -3\n").unwrap();
    let o = magwell(&["--config", path.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["profile.b0", "unknown key `profile.nope`", "`jobs`"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
}

#[test]
fn radial_summary() {
    let o = magwell(&["radial", "--h", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mu = v["mu"].as_f64().unwrap();
    assert!(mu > 0.1 && mu < 0.2, "{mu}");
}

#[test]
fn splitting_csv_is_sorted_by_h() {
    let o = magwell(&["splitting", "--h-list", "0.1,0.08"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let hs: Vec<f64> = text.lines().skip(2).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(hs, vec![0.08, 0.1]);
}

#[test]
fn bad_h_list_is_an_error() {
    let o = magwell(&["sweep", "--h-list", "0.1,zero"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--h-list"));
}

#[test]
fn oversized_grid_spacing_is_refused() {
    let o = magwell(&["grid2d", "--h", "0.1", "--dx", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}
