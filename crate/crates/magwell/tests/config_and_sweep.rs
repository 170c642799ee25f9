use std::path::{Path, PathBuf};

use magwell::asymptotics::PredictionConstants;
use magwell::config::{self, ProfileSource};
use magwell::interaction::ReportInputs;
use magwell::{report, Error};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn config_file_paths_resolve_against_its_directory() {
    let cfg = config::parse_config(&fixture("cfg_a.conf")).unwrap();
    assert_eq!(cfg.csv, Some(fixture("sweep.csv")));
    assert_eq!(cfg.radial.n, 20000);
    assert_eq!(cfg.radial.r_max, 8.0);
    assert!(matches!(cfg.profile.source, ProfileSource::BuiltIn { kappa } if kappa == 1.0));

    let cfg = config::parse_config(&fixture("cfg_table.conf")).unwrap();
    assert_eq!(cfg.profile.source, ProfileSource::Table(fixture("profile_table.csv")));
}

#[test]
fn tabulated_profile_reproduces_builtin_constants() {
    let builtin = config::parse_config(&fixture("cfg_a.conf")).unwrap();
    let table = config::parse_config(&fixture("cfg_table.conf")).unwrap();
    let (p, g) = builtin.profile.build().unwrap();
    let (pt, gt) = table.profile.build().unwrap();
    let k = PredictionConstants::compute(&p, &g).unwrap();
    let kt = PredictionConstants::compute(&pt, &gt).unwrap();
    for (name, a, b) in [("M", k.m, kt.m), ("S", k.s, kt.s), ("S0", k.s0, kt.s0), ("c", k.c, kt.c)] {
        assert!((a - b).abs() <= 1e-6 * a.abs(), "{name}: builtin {a} vs table {b}");
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let err = config::parse_config(&fixture("no_such.conf")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
}

#[test]
fn bad_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "u,beta\n0,1\n0.25,2.5\n0.5,2\n").unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "profile.table = t.csv\n").unwrap();
    let err = config::parse_config(&conf).unwrap_err();
    assert!(err.to_string().contains("outside [b0, b1]"), "{err}");
}

#[test]
fn sweep_is_sorted_and_independent_of_thread_count() {
    let cfg = config::parse_config(&fixture("cfg_a.conf")).unwrap();
    let (p, g) = cfg.profile.build().unwrap();
    let k = PredictionConstants::compute(&p, &g).unwrap();
    let inputs = ReportInputs {
        profile: &p,
        geometry: &g,
        constants: &k,
        radial: &cfg.radial,
        quadrature: &cfg.quadrature,
        amplitude: None,
    };
    let csv = |jobs| {
        let rows = report::sweep(&cfg.h_list, &inputs, jobs).unwrap();
        let mut buf = Vec::new();
        report::write_sweep_csv(&rows, &mut buf).unwrap();
        (rows, String::from_utf8(buf).unwrap())
    };
    let (rows, one) = csv(1);
    let (_, two) = csv(2);
    assert_eq!(one, two);
    assert_eq!(rows.iter().map(|r| r.h).collect::<Vec<_>>(), vec![0.08, 0.1]);

    let mut lines = one.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next().unwrap().split(',').collect::<Vec<_>>(), report::SWEEP_COLUMNS);
    for line in lines {
        let cols: Vec<_> = line.split(',').collect();
        assert_eq!(cols.len(), report::SWEEP_COLUMNS.len());
        for c in &cols[..cols.len() - 1] {
            c.parse::<f64>().unwrap();
        }
    }
}
