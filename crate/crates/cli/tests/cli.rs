use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nsk41");

const OK: &str = "grid.n = 16\nmu = 0.02\ndt = 0.01\nt_end = 0.2\nstride = 2\nic.name = random-band(1,3,1)\n\
seed = 11\nscalar.preset = smooth\ndiag.dt_list = 0.02,0.06\n";

fn nsk41(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).env("NSK41_THREADS", "1").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p).into_iter().map(|f| Path::new(p.file_name().unwrap()).join(f)));
        } else {
            out.push(PathBuf::from(p.file_name().unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let t = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.cfg", format!("{OK}colour = red\n"), "line 10"),
        ("mu0.cfg", OK.replace("mu = 0.02", "mu = 0"), "line 2"),
        ("type.cfg", OK.replace("grid.n = 16", "grid.n = sixteen"), "line 1"),
        ("ladder.cfg", format!("{OK}sweep.mu_list = {{0.01,0.02}}\n"), "ladder must decrease"),
    ];
    for (name, text, needle) in cases {
        let cfg = write(t.path(), name, &text);
        let o = nsk41(&["run", cfg.to_str().unwrap()], t.path());
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let cfg = write(t.path(), "flag.cfg", OK);
    let o = nsk41(&["run", cfg.to_str().unwrap(), "--kstar", "99"], t.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("kstar"));
    let o = nsk41(&["sweep", cfg.to_str().unwrap()], t.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(t.path(), "ok.cfg", OK);
    let o = nsk41(&["run", "ok.cfg", "--out", "first"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let first = t.path().join("first");
    let m = manifest(&first);
    assert_eq!(m["exit_status"], 0);
    assert_eq!(m["threads"], 1);
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config_text"], OK);
    assert!(m["config_canonical"].as_str().unwrap().contains("diag.kstar = 2"));
    assert!(m["finished"].as_f64().unwrap() >= m["started"].as_f64().unwrap());
    std::fs::remove_file(cfg).unwrap();

    let o = nsk41(&["run", "first/manifest.json", "--out", "second"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let second = t.path().join("second");
    let names = files(&first);
    assert_eq!(names, files(&second));
    assert!(names.iter().any(|n| n.ends_with("snap_000010.ck")));
    for n in names.iter().filter(|n| !n.ends_with("manifest.json")) {
        assert_eq!(std::fs::read(first.join(n)).unwrap(), std::fs::read(second.join(n)).unwrap(), "{}", n.display());
    }
    assert_eq!(manifest(&second)["config_sha256"], m["config_sha256"]);
}

#[test]
fn output_directory_is_not_clobbered() {
    let t = tempfile::tempdir().unwrap();
    write(t.path(), "ok.cfg", OK);
    assert!(nsk41(&["run", "ok.cfg"], t.path()).status.success());
    assert!(t.path().join("ok.cfg.out/report.json").is_file());
    let o = nsk41(&["run", "ok.cfg"], t.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"));
    assert!(nsk41(&["run", "ok.cfg", "--force"], t.path()).status.success());
}

#[test]
fn divergence_exits_3() {
    let t = tempfile::tempdir().unwrap();
    let text = "grid.n = 16\nmu = 0.001\ndt = 0.5\nt_end = 20\nic.name = random-band(1,4,10000)\n";
    write(t.path(), "div.cfg", text);
    let o = nsk41(&["run", "div.cfg"], t.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    assert_eq!(manifest(&t.path().join("div.cfg.out"))["exit_status"], 3);
}

#[test]
fn partial_sweep_exits_4_and_keeps_completed_members() {
    let t = tempfile::tempdir().unwrap();
    // the smallest viscosity cannot damp the oversized step
    let text = "grid.n = 16\nmu = 2\ndt = 0.6\nt_end = 30\nic.name = random-band(1,3,4)\nsweep.mu_list = {2,0.0001}\n";
    write(t.path(), "part.cfg", text);
    let o = nsk41(&["sweep", "part.cfg"], t.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let out = t.path().join("part.cfg.out");
    assert!(out.join("checkpoints/mu_00/series.json").is_file());
    assert!(!out.join("checkpoints/mu_01").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["reports"].as_array().unwrap().len(), 1);
    assert_eq!(manifest(&out)["exit_status"], 4);
}

#[test]
fn sweep_then_diag_and_report() {
    let t = tempfile::tempdir().unwrap();
    let text = "grid.n = 8\nmu = 0.1\ndt = 0.02\nt_end = 0.2\nic.name = random-band(1,2,1)\n\
sweep.mu_list = {0.1,0.05}\ndiag.kstar = 1\n";
    write(t.path(), "sw.cfg", text);
    let o = nsk41(&["sweep", "sw.cfg"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = t.path().join("sw.cfg.out");
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(sweep.lines().count() > 2);

    let o = nsk41(&["diag", "sw.cfg.out/checkpoints/mu_01", "--alpha", "0.5", "--dt-list", "0.04,0.08"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let diag = t.path().join("sw.cfg.out/checkpoints/mu_01.diag");
    let modulus = std::fs::read_to_string(diag.join("modulus.csv")).unwrap();
    assert!(modulus.starts_with("# mu=0.05 alpha=0.5 "), "{modulus}");
    assert_eq!(modulus.lines().count(), 4);
    assert!(manifest(&diag)["config_canonical"].as_str().unwrap().contains("diag.alpha = 0.5"));

    let o = nsk41(&["report", "sw.cfg.out"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report/report.json")).unwrap()).unwrap();
    let mus: Vec<f64> =
        report["reports"].as_array().unwrap().iter().map(|r| r["series"]["viscosity"].as_f64().unwrap()).collect();
    assert_eq!(mus, vec![0.1, 0.05]);
}
