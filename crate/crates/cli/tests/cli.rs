use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use icclab::curvature::io;
use icclab::curvature::models::{cylinder, plane_projector, sphere};
use icclab::frame::{oracle_margin, p1};
use icclab::{CurvatureTensor, Mode, SearchBudget};
use jsonschema::{Draft, JSONSchema};
use serde_json::Value;
use tempfile::TempDir;

const RESTARTS: &str = "16";

fn icclab(args: &[&str]) -> Output {
    icclab_env(args, &[])
}

fn icclab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_icclab"));
    cmd.args(args).env_remove("ICCLAB_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_tensor(dir: &TempDir, name: &str, r: &CurvatureTensor) -> PathBuf {
    let path = dir.path().join(name);
    io::write(&path, r).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema(name: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::options()
        .with_draft(Draft::Draft202012)
        .compile(&value)
        .expect("schema compiles")
}

fn assert_valid(name: &str, report: &Value) {
    let compiled = schema(name);
    let msgs: Vec<String> = match compiled.validate(report) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{name} report violates its schema: {msgs:#?}");
}

fn verdicts(report: &Value) -> Vec<String> {
    ["pic", "pic1", "pic2"]
        .iter()
        .map(|k| report["result"][k]["verdict"].as_str().unwrap().to_string())
        .collect()
}

fn margins(report: &Value) -> Vec<f64> {
    ["pic", "pic1", "pic2"]
        .iter()
        .map(|k| report["result"][k]["margin"].as_f64().unwrap())
        .collect()
}

#[test]
fn classify_sphere_is_interior_everywhere() {
    let dir = TempDir::new().unwrap();
    let r = sphere(5, 1.0);
    let file = write_tensor(&dir, "sphere.json", &r);
    let out = icclab(&["classify", s(&file), "--budget-restarts", RESTARTS]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("classify", &report);
    assert_eq!(verdicts(&report), ["interior", "interior", "interior"]);
    // a sampling oracle only ever overestimates a minimum
    for (m, mode) in margins(&report).into_iter().zip([Mode::Pic, Mode::Pic1, Mode::Pic2]) {
        let oracle = oracle_margin(&r, mode, 20_000, 1);
        assert!(m <= oracle + 1e-12 && oracle - m < 0.05, "{mode:?}: {m} vs oracle {oracle}");
    }
}

#[test]
fn classify_cylinder_is_weak_in_pic1_and_pic2() {
    let dir = TempDir::new().unwrap();
    let r = cylinder(5, 1.0);
    let file = write_tensor(&dir, "cyl.json", &r);
    let out = icclab(&["classify", s(&file), "--budget-restarts", RESTARTS]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("classify", &report);
    assert_eq!(verdicts(&report), ["interior", "weak", "weak"]);
    for (m, mode) in margins(&report).into_iter().zip([Mode::Pic, Mode::Pic1, Mode::Pic2]) {
        let oracle = oracle_margin(&r, mode, 20_000, 2);
        assert!(m <= oracle + 1e-12 && oracle - m < 0.05, "{mode:?}: {m} vs oracle {oracle}");
    }
}

#[test]
fn classify_csv_has_one_row_per_cone() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "sphere.json", &sphere(5, 1.0));
    let out = icclab(&["classify", s(&file), "--format", "csv", "--budget-restarts", "4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "cone,margin,verdict,converged");
    assert_eq!(rows.len(), 5);
    assert!(text.contains("content_hash="));
}

#[test]
fn malformed_json_exits_one_without_report() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dim\": 5, \"basis\": ").unwrap();
    let out = icclab(&["classify", s(&path)]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn input_errors_exit_one() {
    assert_eq!(code(&icclab(&["classify", "/nonexistent/tensor.json"])), 1);
    assert_eq!(code(&icclab(&["classify"])), 1);
    assert_eq!(code(&icclab(&["models", "--omega", "cubic:2"])), 1);
    assert_eq!(code(&icclab(&["models", "--no-such-flag"])), 1);

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("wrong_size.json");
    std::fs::write(&path, r#"{"dim": 5, "basis": "lex-2form", "matrix": [[1.0]]}"#).unwrap();
    assert_eq!(code(&icclab(&["classify", s(&path)])), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&icclab(&["--help"])), 0);
}

/// Report text with the trailing timing object removed.
fn without_timing(out: &Output) -> String {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let cut = text.find("\"timing\"").expect("timing key present");
    text[..cut].to_string()
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let r = cylinder(5, 1.0) - plane_projector(5, 0, 4).scaled(0.05);
    let file = write_tensor(&dir, "pc.json", &r);
    for args in [
        vec!["classify", s(&file), "--seed", "7", "--budget-restarts", "8"],
        vec!["p1", s(&file), "--seed", "7", "--budget-restarts", "8"],
        vec!["lemma31", "--count", "4", "--seed", "3", "--budget-restarts", "4"],
    ] {
        let a = icclab(&args);
        let b = icclab(&args);
        assert_eq!(code(&a), 0);
        assert_eq!(without_timing(&a), without_timing(&b), "{args:?}");
    }
}

#[test]
fn report_embeds_config_seed_and_content_hash() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "sphere.json", &sphere(5, 1.0));
    let bytes = std::fs::read(&file).unwrap();
    let out = icclab(&["classify", s(&file), "--seed", "11", "--theta", "0.02", "--budget-restarts", "4"]);
    let report = json(&out);
    assert_eq!(report["seed"], 11);
    assert_eq!(report["config"]["seed"], 11);
    assert_eq!(report["config"]["budget"]["seed"], 11);
    assert_eq!(report["config"]["theta"], 0.02);
    assert_eq!(report["config"]["budget"]["restarts"], 4);
    assert_eq!(report["input"]["content_hash"], io::content_hash(&bytes));
    assert!(report["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seed_precedence_env_then_config_then_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 5, "models": {"points": 2}}"#).unwrap();
    let seed_of = |args: &[&str], env: &[(&str, &str)]| json(&icclab_env(args, env))["seed"].as_u64().unwrap();

    assert_eq!(seed_of(&["models", "--points", "2"], &[("ICCLAB_SEED", "3")]), 3);
    assert_eq!(seed_of(&["models", "--config", s(&cfg)], &[("ICCLAB_SEED", "3")]), 5);
    assert_eq!(
        seed_of(&["models", "--config", s(&cfg), "--seed", "9"], &[("ICCLAB_SEED", "3")]),
        9
    );
}

#[test]
fn unknown_config_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"thetta": 0.1}"#).unwrap();
    assert_eq!(code(&icclab(&["models", "--config", s(&cfg)])), 1);
}

#[test]
fn p1_on_perturbed_cylinder_is_negative() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("pc.json");
    let gen = icclab(&["gen", "perturbed-cylinder", "--dim", "5", "--out", s(&file)]);
    assert_eq!(code(&gen), 0);
    let out = icclab(&["p1", s(&file), "--budget-restarts", RESTARTS]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("p1", &report);
    let value = report["result"]["value"].as_f64().unwrap();
    assert!(value < 0.0);
    assert_eq!(report["result"]["witness"]["frame"].as_array().unwrap().len(), 4);

    let (r, _) = io::read(&file, Default::default()).unwrap();
    let lib = p1(&r, &SearchBudget::default().with_restarts(16)).unwrap();
    assert_eq!(value, lib.value);
}

#[test]
fn p1_rejects_weakly_pic_input() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "flat.json", &CurvatureTensor::zeros(5));
    assert_eq!(code(&icclab(&["p1", s(&file), "--budget-restarts", "4"])), 1);
}

#[test]
fn flow_csv_matches_sphere_closed_form() {
    let dir = TempDir::new().unwrap();
    let n = 5.0;
    let file = write_tensor(&dir, "sphere.json", &sphere(5, 1.0));
    let csv = dir.path().join("flow.csv");
    let out = icclab(&[
        "flow",
        s(&file),
        "--t-end",
        "0.1",
        "--format",
        "csv",
        "--out",
        s(&csv),
        "--budget-restarts",
        "4",
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "t,scal,PIC,PIC1,PIC2");
    let mut rows = 0;
    let mut last_t = 0.0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (t, scal) = (cols[0], cols[1]);
        let exact = n * (n - 1.0) / (1.0 - 2.0 * (n - 1.0) * t);
        assert!((scal - exact).abs() <= 1e-6 * exact, "t={t}: {scal} vs {exact}");
        rows += 1;
        last_t = t;
    }
    assert!(rows > 2);
    assert!((last_t - 0.1).abs() < 1e-12);
}

#[test]
fn flow_blow_up_is_a_soft_warning_with_partial_trajectory() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "sphere.json", &sphere(5, 1.0));
    let out = icclab(&["flow", s(&file), "--t-end", "0.2", "--cones", "PIC2", "--budget-restarts", "4"]);
    assert_eq!(code(&out), 2);
    let report = json(&out);
    assert_valid("flow", &report);
    assert!(report["result"]["stopped_early"].is_string());
    let times = report["result"]["trajectory"]["times"].as_array().unwrap();
    let last = times.last().unwrap().as_f64().unwrap();
    assert!(last < 0.125 && last > 0.12);
}

#[test]
fn flow_accepts_uniform_and_pullback_cones() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "sphere.json", &sphere(5, 1.0));
    let out = icclab(&[
        "flow",
        s(&file),
        "--t-end",
        "0.01",
        "--cones",
        "UPIC,UPIC:0.02,EB:0.1",
        "--budget-restarts",
        "4",
    ]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("flow", &report);
    assert_eq!(report["result"]["trajectory"]["cones"].as_array().unwrap().len(), 3);
    assert_eq!(code(&icclab(&["flow", s(&file), "--cones", "PIC3"])), 1);
}

#[test]
fn pipeline_exit_codes() {
    let dir = TempDir::new().unwrap();
    let file = write_tensor(&dir, "cyl9.json", &cylinder(9, 1.0));
    let theta = (1.0f64 / 224.0).to_string();

    let out = icclab(&["pipeline", s(&file), "--theta", &theta, "--budget-restarts", RESTARTS]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("pipeline", &report);
    let b = report["result"]["admissible_b"].as_f64().unwrap();
    assert!(report["config"]["b_grid"].as_array().unwrap().iter().any(|v| v.as_f64() == Some(b)));

    let none = icclab(&[
        "pipeline",
        s(&file),
        "--theta",
        &theta,
        "--b-grid",
        "0.2",
        "--budget-restarts",
        RESTARTS,
    ]);
    assert_eq!(code(&none), 2);
    let report = json(&none);
    assert_valid("pipeline", &report);
    assert!(report["result"]["admissible_b"].is_null());
    assert_eq!(report["result"]["rows"].as_array().unwrap().len(), 1);

    let flat = write_tensor(&dir, "flat.json", &CurvatureTensor::zeros(9));
    assert_eq!(code(&icclab(&["pipeline", s(&flat), "--budget-restarts", "4"])), 1);
}

#[test]
fn lemma31_small_batch_passes() {
    let out = icclab(&["lemma31", "--count", "6", "--dims", "5,6", "--budget-restarts", "8"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("lemma31", &report);
    assert_eq!(report["result"]["cases"].as_array().unwrap().len(), 6);
    assert_eq!(report["result"]["violations"], 0);
    assert!(report["input"].is_null());
}

#[test]
fn models_residuals_and_hypotheses() {
    let out = icclab(&["models", "--points", "20", "--dims", "5,7", "--budget-restarts", RESTARTS]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_valid("models", &report);
    assert!(report["result"]["max_residual"].as_f64().unwrap() <= 1e-12);
    let tables = report["result"]["tables"].as_array().unwrap();
    assert_eq!(tables.len(), 6);
    for t in tables {
        assert_eq!(t["points"].as_array().unwrap().len(), 20);
        let hyp = &t["hypotheses"];
        match t["model"]["kind"].as_str().unwrap() {
            "gaussian" => {
                assert_eq!(hyp["strictly_pic"], false);
                assert_eq!(hyp["all_hold"], false);
                assert!(t["theta_bound"].is_null());
            }
            _ => assert_eq!(hyp["all_hold"], true, "{}", t["model"]),
        }
    }
}

#[test]
fn models_residual_over_tolerance_is_an_assertion_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"tolerances": {"identity": 1e-300}}"#).unwrap();
    let out = icclab(&["models", "--config", s(&cfg), "--points", "20", "--budget-restarts", "4"]);
    let report = json(&out);
    assert_valid("models", &report);
    let max = report["result"]["max_residual"].as_f64().unwrap();
    if max > 1e-300 {
        assert_eq!(code(&out), 3);
        assert_eq!(report["outcome"]["exit_code"], 3);
    } else {
        assert_eq!(code(&out), 0);
    }
}

#[test]
fn gen_writes_valid_tensor_files() {
    let dir = TempDir::new().unwrap();
    let compiled = schema("tensor");
    for kind in ["sphere", "cylinder", "random", "perturbed-cylinder"] {
        let path = dir.path().join(format!("{kind}.json"));
        let out = icclab(&["gen", kind, "--dim", "6", "--seed", "2", "--out", s(&path)]);
        assert_eq!(code(&out), 0, "{kind}");
        let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(compiled.is_valid(&value), "{kind}");
        let (_, load) = io::read(&path, Default::default()).unwrap();
        assert!(!load.projected, "{kind}");
    }
    assert_eq!(code(&icclab(&["gen", "random", "--class", "nope"])), 1);
}
