//! End-to-end runs of the `ndrank` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ndrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndrank"))
        .args(args)
        .env("NDRANK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_exit_codes() {
    let o = ndrank(&["check", "fixture:selenium"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("t12 <= t32"), "{out}");
    assert!(out.contains("t13 - t14 - t33 + t34 >= 0"), "{out}");

    assert_eq!(ndrank(&["check", "fixture:collider"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,oops\n").unwrap();
    let o = ndrank(&["check", bad.to_str().unwrap(), "-p", "chain:2", "-p", "chain:2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2, column 3"), "{}", stderr(&o));
}

#[test]
fn check_with_files() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    fs::write(&t, r#"{"shape":[2,2],"data":[1,2,2,4]}"#).unwrap();
    let p = dir.path().join("two.poset");
    fs::write(&p, "# two elements\nelements: lo,hi\nlo < hi\n").unwrap();
    let ps = p.to_str().unwrap();
    let o = ndrank(&["check", t.to_str().unwrap(), "-p", ps, "-p", ps, "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["finite_rank"]["verdict"], "Member");

    let o = ndrank(&["check", t.to_str().unwrap(), "-p", ps]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rays_and_hrep() {
    let o = ndrank(&["rays", "chain:2", "chain:3", "--finite-rank", "--count-only"]);
    assert_eq!(stdout(&o).trim(), "6");
    let o = ndrank(&["rays", "chain:2", "chain:3", "--product", "--count-only"]);
    assert_eq!(stdout(&o).trim(), "9");
    let o = ndrank(&["rays", "fixture:collider"]);
    assert_eq!(stdout(&o).lines().count(), 4);

    let o = ndrank(&["hrep", "star:3", "star:3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 24);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.txt");
    let o = ndrank(&["hrep", "chain:2", "chain:2", "--pretty", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("t11 - t12 - t21 + t22 >= 0"), "{text}");
    assert!(dir.path().join("h.txt.manifest.json").exists());

    let o = ndrank(&["rays", "chain:30", "chain:30", "--product"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("guard"));
}

#[test]
fn bounds_and_sample() {
    let o = ndrank(&["bounds", "fixture:selenium_type", "fixture:selenium_concentration"]);
    assert!(stdout(&o).contains("max rank: 4"));
    let o = ndrank(&["bounds", "chain:5", "chain:5"]);
    assert!(stdout(&o).contains("max rank: 5"));
    let o = ndrank(&["sample", "--m", "1", "--n", "10"]);
    assert!(stdout(&o).contains("estimate=1.000000"), "{}", stdout(&o));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn factorize_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "factorize".to_string(),
            "fixture:cchs".into(),
            "--rank".into(),
            "2".into(),
            "--restarts".into(),
            "10".into(),
            "--seed".into(),
            "3".into(),
            "--gauge".into(),
            "*,7,1".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let run = |d: &Path| {
        let v = args(d);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        ndrank(&refs)
    };
    let oa = run(a.path());
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    let ob = run(b.path());
    let out = stdout(&oa);
    assert!(out.contains("TSS: 6925.2600"), "{out}");
    let rss: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("RSS: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((50.0..=65.0).contains(&rss), "{rss}");

    for name in [
        "factorization.json",
        "factors_mode1.csv",
        "factors_mode2.csv",
        "factors_mode3.csv",
        "trace.csv",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs");
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(a.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "factorize");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["rank"], 2);
    assert!(manifest["wall_time_secs"].as_f64().is_some());
    assert_eq!(stdout(&ob).lines().count(), out.lines().count());

    let export = ndrank::io::FactorizationExport::from_json(&read(a.path(), "factorization.json")).unwrap();
    assert_eq!(export.rank, 2);
    assert_eq!(export.posets.len(), 3);
    let f = export.factorization().unwrap();
    assert!((f.residual(&ndrank::fixtures::cchs()).unwrap().powi(2) - rss).abs() < 1e-3);
    let gender = read(a.path(), "factors_mode3.csv");
    assert!(gender.starts_with("element,term1,term2\nfemale,"), "{gender}");
}

#[test]
fn factorize_other_losses() {
    let o = ndrank(&["factorize", "fixture:selenium", "--loss", "poisson"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("objective:"));
    let o = ndrank(&["factorize", "fixture:cchs", "--loss", "poisson", "--rank", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("only supports rank 1"));
    let o = ndrank(&["factorize", "fixture:cchs", "--loss", "huber"]);
    assert_eq!(o.status.code(), Some(2));
}
