use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const SMALL: &str = "\
grid.n = 64
grid.half_width = 12
evolution.horizon = 2
evolution.stride = 5
nonlinearity.n1 = 1, 0.5, -0.5, 0.25
nonlinearity.n2 = 0.5, -0.25, 0.5, 1
data.amplitude = 0.05
";

fn wkg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkg")).args(args).env("WKG_OUT", out).output().expect("spawn wkg")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_passes_with_one_row_per_identity() {
    let tmp = TempDir::new().unwrap();
    let o = wkg(&["verify", "--trials", "5"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = stdout(&o).lines().filter(|l| l.ends_with(" yes") || l.ends_with(" NO")).count();
    assert_eq!(rows, wkg_core::nullforms::identities::catalog().len());
}

#[test]
fn corrupted_identity_is_reported_by_name() {
    let tmp = TempDir::new().unwrap();
    let target = wkg_core::nullforms::identities::catalog()[0].name.clone();
    let o = wkg(&["verify", "--trials", "5", "--corrupt", &target], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let failing: Vec<&str> = text.lines().filter(|l| l.ends_with(" NO")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with(&target));
    assert!(text.contains("FAILED"));
}

#[test]
fn zero_amplitude_run_has_zero_energies() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "zero.cfg", &format!("{SMALL}data.amplitude = 0\n").replace("data.amplitude = 0.05\n", ""));
    let o = wkg(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("zero/energy.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("time,E,E1,E2,Evf,Equasi,A,B"));
    let mut rows = 0;
    for l in lines {
        rows += 1;
        assert!(l.split(',').skip(1).all(|x| x.parse::<f64>().unwrap() == 0.0), "{l}");
    }
    assert!(rows >= 2);
}

#[test]
fn cfl_violation_exits_one_before_stepping() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.cfg", &format!("{SMALL}grid.dt = 1.0\n"));
    let o = wkg(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CFL"));
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    for (name, body) in [("unknown.cfg", "grid.q = 1\n"), ("horizon.cfg", "evolution.horizon = 40\n")] {
        let cfg = write_cfg(tmp.path(), name, body);
        assert_eq!(wkg(&["run", cfg.to_str().unwrap()], tmp.path()).status.code(), Some(1));
    }
    let missing = tmp.path().join("nope.cfg");
    assert_eq!(wkg(&["run", missing.to_str().unwrap()], tmp.path()).status.code(), Some(1));
}

#[test]
fn integral_cap_blowup_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "cap.cfg", &format!("{SMALL}evolution.b_integral_cap = 1e-6\n"));
    let o = wkg(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let meta = fs::read_to_string(tmp.path().join("cap/metadata.json")).unwrap();
    assert!(meta.contains("\"B-integral-cap\""));
}

#[test]
fn runs_are_bitwise_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for root in [&a, &b] {
        let cfg = write_cfg(root.path(), "det.cfg", SMALL);
        assert_eq!(wkg(&["run", cfg.to_str().unwrap()], root.path()).status.code(), Some(0));
    }
    let mut compared = 0;
    for entry in fs::read_dir(a.path().join("det")).unwrap() {
        let name = entry.unwrap().file_name();
        let x = fs::read(a.path().join("det").join(&name)).unwrap();
        let y = fs::read(b.path().join("det").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
        compared += 1;
    }
    assert!(compared >= 6);
}

#[test]
fn metadata_records_schema_and_smallness() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "meta.cfg", SMALL);
    assert_eq!(wkg(&["run", cfg.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("meta/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert!(meta["summary"]["smallness_norm"].as_f64().unwrap() > 0.0);
    assert_eq!(meta["config"]["grid.n"], "64");
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("meta/fit.json")).unwrap()).unwrap();
    assert_eq!(fit["schema_version"], 1);
    let regions = fs::read_to_string(tmp.path().join("meta/regions.csv")).unwrap();
    assert_eq!(regions.lines().next().unwrap(), "time,T,S,kind,points,sup_du,sup_dv,sup_Zu");
}

#[test]
fn singleton_sweep_matches_run() {
    let tmp = TempDir::new().unwrap();
    let run_cfg = write_cfg(tmp.path(), "one.cfg", SMALL);
    assert_eq!(wkg(&["run", run_cfg.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    let sweep_cfg = write_cfg(tmp.path(), "sw.cfg", &format!("{SMALL}sweep.eps = 0.05\n"));
    assert_eq!(wkg(&["sweep", sweep_cfg.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    for f in ["energy.csv", "regions.csv", "region_norms.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("one").join(f)).unwrap(),
            fs::read(tmp.path().join("sw/eps_0.05").join(f)).unwrap(),
            "{f}"
        );
    }
    let summary = fs::read_to_string(tmp.path().join("sw/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "eps,t_star,reason,growth_p");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.05,2,horizon,"));
}

#[test]
fn permuting_amplitudes_permutes_rows() {
    let tmp = TempDir::new().unwrap();
    let a = write_cfg(tmp.path(), "pa.cfg", &format!("{SMALL}sweep.eps = 0.02, 0.04\n"));
    let b = write_cfg(tmp.path(), "pb.cfg", &format!("{SMALL}sweep.eps = 0.04, 0.02\n"));
    for c in [&a, &b] {
        assert_eq!(wkg(&["sweep", c.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    }
    let rows = |d: &str| -> Vec<String> {
        fs::read_to_string(tmp.path().join(d).join("summary.csv")).unwrap().lines().skip(1).map(String::from).collect()
    };
    let (ra, rb) = (rows("pa"), rows("pb"));
    assert_eq!(ra[0], rb[1]);
    assert_eq!(ra[1], rb[0]);
}

#[test]
fn fit_recomputes_from_csvs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "f.cfg", SMALL);
    assert_eq!(wkg(&["run", cfg.to_str().unwrap()], tmp.path()).status.code(), Some(0));
    let dir = tmp.path().join("f");
    let before = fs::read(dir.join("fit.json")).unwrap();
    fs::remove_file(dir.join("fit.json")).unwrap();
    let o = wkg(&["fit", dir.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.join("fit.json")).unwrap(), before);
    assert_eq!(wkg(&["fit", tmp.path().join("absent").to_str().unwrap()], tmp.path()).status.code(), Some(1));
}
