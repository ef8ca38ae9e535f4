use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsm_cli::commands::read_measurements;
use dsm_cli::ExperimentConfig;
use dsm_core::Stations;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = dsm(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copies a shipped config with some JSON values replaced.
fn variant(name: &str, dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name.replace('/', "_"));
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn report(path: &Path) -> HashMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn interval(v: &str) -> (f64, f64) {
    let (a, b) = v.split_once(',').unwrap();
    (a.parse().unwrap(), b.parse().unwrap())
}

#[test]
fn every_shipped_config_resolves() {
    let mut names = Vec::new();
    for dir in fs::read_dir(configs()).unwrap() {
        let dir = dir.unwrap().path();
        for f in fs::read_dir(&dir).unwrap() {
            let f = f.unwrap().path();
            let c = ExperimentConfig::load(&f).unwrap().resolve().unwrap_or_else(|e| panic!("{}: {e}", f.display()));
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap().resolve().unwrap();
            assert_eq!(back, c);
        }
        names.push(dir.file_name().unwrap().to_string_lossy().to_string());
    }
    names.sort();
    let mut expect: Vec<String> = (4..=13).map(|i| format!("fig{i}")).collect();
    expect.extend(["ex1".to_string(), "ex2".to_string()]);
    expect.sort();
    assert_eq!(names, expect);
}

#[test]
fn fig4_end_to_end_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("fig4/a.json");
    for out in [&a, &b] {
        ok(&["simulate", "--config", s(&cfg), "--out", s(out)]);
        ok(&["reconstruct", "--config", s(&cfg), "--out", s(out)]);
        ok(&["analyze", "--config", s(&cfg), "--out", s(out)]);
    }
    let data = read_measurements(&a.join("measurement.csv")).unwrap();
    assert_eq!(data.station_count(), 1);
    assert_eq!(data.station_values(0).len(), 200);
    let text = fs::read_to_string(a.join("measurement.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 200);

    for f in [
        "measurement.csv",
        "resolved_config.json",
        "i1_0.csv",
        "i2_0.csv",
        "combined_0.csv",
        "aggregated.csv",
        "normalized.csv",
        "i1_0.pgm",
        "i2_0.pgm",
        "combined_0.pgm",
        "normalized.pgm",
        "report.txt",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
    let r = report(&a.join("report.txt"));
    let err: f64 = r["strip_boundary_error"].parse().unwrap();
    assert!(err <= 0.2, "strip error {err}");
    let (lo, hi) = interval(&r["strip.true_interval"]);
    assert!((lo + 1.5).abs() < 1e-9 && (hi - 1.5).abs() < 1e-9);
    assert!(r.contains_key("station.0.supporting_interval"));
    assert!(!r.keys().any(|k| k.starts_with("runtime")));

    let resolved = ExperimentConfig::load(&a.join("resolved_config.json")).unwrap();
    assert_eq!(resolved, ExperimentConfig::load(&cfg).unwrap().resolve().unwrap());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("fig13/a.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([41, 41]);
        v["measurement"]["uniform_angles"] = serde_json::json!(3);
        v["output"]["images"] = serde_json::json!(false);
    });
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a), "--threads", "1"]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(&a), "--threads", "1"]);
    ok(&["simulate", "--config", s(&cfg), "--out", s(&b), "--threads", "3"]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(&b), "--threads", "3"]);
    for f in ["measurement.csv", "aggregated.csv", "normalized.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("fig13/b.json", tmp.path(), |v| {
        v["measurement"]["uniform_angles"] = serde_json::json!(2);
    });
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["simulate", "--config", s(&cfg), "--out", s(&b), "--seed", "7"]);
    let (da, db) = (read_measurements(&a.join("measurement.csv")).unwrap(), read_measurements(&b.join("measurement.csv")).unwrap());
    assert_eq!((da.seed(), db.seed()), (1, 7));
    assert_ne!(da.values(), db.values());
    assert_eq!(ExperimentConfig::load(&b.join("resolved_config.json")).unwrap().noise.seed, 7);
}

#[test]
fn sixteen_directions_are_as_configured() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("fig11/b.json", tmp.path(), |v| {
        v["measurement"]["count"] = serde_json::json!(20);
    });
    ok(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    let data = read_measurements(&tmp.path().join("measurement.csv")).unwrap();
    let Stations::Directions(d) = data.stations() else { panic!("far field expected") };
    assert_eq!(d.len(), 16);
    for (m, dir) in d.iter().enumerate() {
        let theta = m as f64 * PI / 16.0;
        assert!((dir.as_slice()[0] - theta.cos()).abs() < 1e-15 && (dir.as_slice()[1] - theta.sin()).abs() < 1e-15);
    }
}

#[test]
fn single_station_aggregate_equals_combined() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("fig5/b.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([41, 41]);
        v["pipeline"]["normalize_per_station"] = serde_json::json!(false);
        v["output"] = serde_json::json!({"fields": ["combined", "aggregated"]});
    });
    ok(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(tmp.path())]);
    let c = dsm_cli::commands::read_field(&tmp.path().join("combined_0.csv")).unwrap();
    let a = dsm_cli::commands::read_field(&tmp.path().join("aggregated.csv")).unwrap();
    for (x, y) in c.values().iter().zip(a.values()) {
        assert!((x - y).abs() <= 1e-15 * x.abs());
    }
}

#[test]
fn two_component_report_lists_both_strips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig8/a.json");
    ok(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["analyze", "--config", s(&cfg), "--out", s(tmp.path())]);
    let r = report(&tmp.path().join("report.txt"));
    assert_eq!(r["station.0.assumption_a.0_1"], "true");
    let comps: usize = r["mask.components"].parse().unwrap();
    assert!(comps >= 2, "{comps} components");
    let truths = [interval(&r["station.0.component.0.true_interval"]), interval(&r["station.0.component.1.true_interval"])];
    // The kite strip is recovered; every mask component lies in the strip
    // of some support component.
    let found: Vec<(f64, f64)> = (0..comps).map(|i| interval(&r[&format!("mask.component.{i}.interval")])).collect();
    assert!(found.iter().any(|f| (f.0 - truths[0].0).abs() <= 0.2 && (f.1 - truths[0].1).abs() <= 0.2), "{found:?} vs {truths:?}");
    for f in &found {
        assert!(truths.iter().any(|t| f.0 >= t.0 - 0.2 && f.1 <= t.1 + 0.2), "{f:?} outside {truths:?}");
    }
}

#[test]
fn near_field_report_scores_annulus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("ex1/a.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([31, 31, 31]);
        v["measurement"]["density"] = serde_json::json!(15);
    });
    ok(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["analyze", "--config", s(&cfg), "--out", s(tmp.path())]);
    let r = report(&tmp.path().join("report.txt"));
    let (lo, hi) = interval(&r["station.0.true_annulus"]);
    assert!((lo - 2.0).abs() < 1e-12 && (hi - 18f64.sqrt()).abs() < 1e-12);
    let recall: f64 = r["recall"].parse().unwrap();
    assert!(recall >= 0.9, "recall {recall}");
    assert_eq!(r["strip_boundary_error"], "undefined");
    let vtk = fs::read_to_string(tmp.path().join("normalized.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 31 31 31"));
}

#[test]
fn render_exports_and_rejects_wrong_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant("fig4/a.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([21, 31]);
        v["output"] = serde_json::json!({"fields": ["normalized"]});
    });
    ok(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    ok(&["reconstruct", "--config", s(&cfg), "--out", s(tmp.path())]);
    let field = tmp.path().join("normalized.csv");
    let img = tmp.path().join("img");
    ok(&["render", "--field", s(&field), "--out", s(&img)]);
    let first = fs::read(img.join("normalized.pgm")).unwrap();
    ok(&["render", "--field", s(&field), "--format", "pgm", "--out", s(&img)]);
    assert_eq!(fs::read(img.join("normalized.pgm")).unwrap(), first);
    assert!(first.starts_with(b"P5\n21 31\n65535\n"));
    // The brightest pixel sits at the field's argmax.
    let f = dsm_cli::commands::read_field(&field).unwrap();
    let ij = f.grid().unravel(f.argmax());
    let header = b"P5\n21 31\n65535\n".len();
    let px = header + 2 * ((30 - ij[1]) * 21 + ij[0]);
    assert_eq!(u16::from_be_bytes([first[px], first[px + 1]]), 65535);

    let o = dsm(&["render", "--field", s(&field), "--format", "vtk", "--out", s(&img)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = variant("fig4/a.json", tmp.path(), |v| {
        v["pipeline"]["mystery"] = serde_json::json!(1);
    });
    let o = dsm(&["simulate", "--config", s(&bad), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("line") && msg.contains("mystery"), "{msg}");

    let syntax = tmp.path().join("syntax.json");
    fs::write(&syntax, "{\n  \"domain\": [\n}").unwrap();
    let o = dsm(&["simulate", "--config", s(&syntax)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let small = variant("fig4/a.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([11, 11]);
    });
    let out = tmp.path().join("run");
    ok(&["simulate", "--config", s(&small), "--out", s(&out)]);
    let other = variant("fig5/a.json", tmp.path(), |v| {
        v["grid"]["resolution"] = serde_json::json!([11, 11]);
    });
    let data = out.join("measurement.csv");
    let o = dsm(&["reconstruct", "--config", s(&other), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = lines.iter().position(|l| !l.starts_with('#')).unwrap() + 3;
    lines[row] = "0,garbage".into();
    let broken = tmp.path().join("broken.csv");
    fs::write(&broken, lines.join("\n") + "\n").unwrap();
    let o = dsm(&["reconstruct", "--config", s(&small), "--data", s(&broken), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!(":{}:", row + 1)));

    ok(&["reconstruct", "--config", s(&small), "--out", s(&out)]);
    let field = fs::read_to_string(out.join("normalized.csv")).unwrap();
    let nan = tmp.path().join("nan.csv");
    let mut fl: Vec<String> = field.lines().map(String::from).collect();
    let last = fl.len() - 1;
    let (head, _) = fl[last].rsplit_once(',').unwrap();
    fl[last] = format!("{head},NaN");
    fs::write(&nan, fl.join("\n") + "\n").unwrap();
    let o = dsm(&["render", "--field", s(&nan), "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));

    let o = dsm(&["analyze", "--config", s(&small), "--out", s(&tmp.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(1));
}
