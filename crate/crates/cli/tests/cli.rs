use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbr"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn bbr")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).expect("column");
    r.records().map(|x| x.unwrap()[idx].to_string()).collect()
}

#[test]
fn validate_clean_fixture() {
    let o = bbr(&["validate", "--input", s(&fixture("case_one.csv")), "--mapping", "ulery2011"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("responses: 32"));
    assert!(out.contains("examiners: 8"));
    assert!(out.contains("SS:Inconclusive: 8"));
}

#[test]
fn validate_unmapped_label_names_it() {
    let o = bbr(&["validate", "--input", s(&fixture("unmapped.csv")), "--mapping", "ulery2011"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Maybe"), "{}", stderr(&o));
}

#[test]
fn validate_reports_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbr(&[
        "validate",
        "--input",
        s(&fixture("duplicates.csv")),
        "--mapping",
        "ulery2011",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("duplicates removed: 1"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(json["duplicates_removed"], 1);
    // the sequence-1 response (Individualization) is the one kept
    assert_eq!(json["cells"]["SS:Identification"], 2);
    assert!(dir.path().join("manifest.validate.json").exists());
}

#[test]
fn missing_input_is_a_validation_error() {
    let o = bbr(&["validate", "--input", "/nonexistent/file.csv", "--mapping", "ulery2011"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decompose_case_fixtures() {
    for (file, expected) in [("case_one.csv", 1.0), ("case_two.csv", 0.0)] {
        let dir = tempfile::tempdir().unwrap();
        let o = bbr(&[
            "decompose",
            "--input",
            s(&fixture(file)),
            "--mapping",
            "ulery2011",
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let ratio = column(&dir.path().join("decomposition.csv"), "ratio");
        assert_eq!(ratio.len(), 1);
        assert_eq!(ratio[0].parse::<f64>().unwrap(), expected, "{file}");
        assert!(dir.path().join("hist_examiners_ss_all.svg").exists());
        assert!(dir.path().join("hist_items_ss_all.svg").exists());
        assert!(dir.path().join("manifest.decompose.json").exists());
    }
}

#[test]
fn rates_with_grouping_and_exclusion() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbr(&[
        "rates",
        "--input",
        s(&fixture("firearms_small.csv")),
        "--mapping",
        "monson2022",
        "--group-by-elims",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let groups = column(&dir.path().join("contingency.csv"), "group");
    assert_eq!(groups, ["made_ind_elims", "no_ind_elims"]);
    let rows = csv_rows(&dir.path().join("rates.csv"));
    assert_eq!(rows.len(), 2 * 2 * 4);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.rates.json")).unwrap()).unwrap();
    assert_eq!(m["policy"], "exclude");
    assert_eq!(m["group_by_elims"], true);
}

#[test]
fn report_without_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbr(&["report", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("run fit first"), "{}", stderr(&o));
    let o = bbr(&["ppc", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_is_byte_deterministic_and_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = bbr(&[
            "simulate",
            "--params",
            s(&fixture("params.json")),
            "--assignment",
            s(&fixture("assignment.csv")),
            "--seed",
            "11",
            "--out",
            s(d.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let fa = fs::read(a.path().join("simulated.csv")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("simulated.csv")).unwrap());

    let sim = a.path().join("simulated.csv");
    let o = bbr(&["validate", "--input", s(&sim), "--mapping", "canonical"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("responses: 300"));
    let o = bbr(&["decompose", "--input", s(&sim), "--mapping", "canonical", "--out", s(a.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn saturated_parameters_give_no_inconclusives() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbr(&["simulate", "--params", s(&fixture("saturated.json")), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let conclusions = column(&dir.path().join("simulated.csv"), "conclusion");
    assert_eq!(conclusions.len(), 12);
    assert!(conclusions.iter().all(|c| c == "Identification"));
}

#[test]
fn malformed_params_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"theta": [0.0], "zeta": [0.0], "sigma_zeta": -1, "omega": 1, "alpha": 0}"#).unwrap();
    let o = bbr(&["simulate", "--params", s(&bad), "--out", s(dir.path())]);
    assert_ne!(o.status.code(), Some(0));
    fs::write(&bad, "not json").unwrap();
    let o = bbr(&["simulate", "--params", s(&bad), "--out", s(dir.path())]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn full_pipeline_on_synthetic_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = bbr(&[
        "simulate",
        "--params",
        s(&fixture("params.json")),
        "--assignment",
        s(&fixture("assignment.csv")),
        "--seed",
        "5",
        "--out",
        s(out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sim = out.join("simulated.csv");
    let common = ["--input", s(&sim), "--mapping", "canonical", "--out", s(out)];
    for cmd in ["rates", "decompose"] {
        let mut a = vec![cmd];
        a.extend(common);
        let o = bbr(&a);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    let mut a = vec!["fit", "--iters", "1200", "--warmup", "600", "--seed", "2"];
    a.extend(common);
    let o = bbr(&a);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("fit/ss_all/draws.bin").exists());
    assert!(out.join("fit/ds_all/summary.csv").exists());

    let o = bbr(&["ppc", "--out", s(out), "--n-sims", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = bbr(&["report", "--out", s(out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let rows = csv_rows(&out.join("failure_rates.csv"));
    assert_eq!(rows.len(), 2);
    let f = column(&out.join("failure_rates.csv"), "model_failure");
    let lo = column(&out.join("failure_rates.csv"), "inc_correct");
    let hi = column(&out.join("failure_rates.csv"), "inc_incorrect");
    for k in 0..2 {
        let (f, lo, hi): (f64, f64, f64) = (f[k].parse().unwrap(), lo[k].parse().unwrap(), hi[k].parse().unwrap());
        assert!(lo <= f && f <= hi, "row {k}: {lo} <= {f} <= {hi}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["failure_rates"].as_array().unwrap().len(), 2);
    assert_eq!(report["ppc"].as_array().unwrap().len(), 2);
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("Failure rates"));
    for m in ["simulate", "rates", "decompose", "fit", "ppc", "report"] {
        assert!(out.join(format!("manifest.{m}.json")).exists(), "manifest for {m}");
    }
}

#[test]
fn bad_sampler_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bbr(&[
        "fit",
        "--input",
        s(&fixture("case_one.csv")),
        "--mapping",
        "ulery2011",
        "--iters",
        "100",
        "--warmup",
        "100",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
