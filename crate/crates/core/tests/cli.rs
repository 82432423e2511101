mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{linear, scalar};
use hyperspec::graph::{Graph, GraphBuilder, Matrix};
use hyperspec::io::{export_model, save_graph};
use serde_json::Value;

fn hyperspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperspec")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn manifest(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("manifest line");
    serde_json::from_str(line).unwrap()
}

/// `|x - 0.5|` as two ReLUs.
fn abs_shifted() -> Graph {
    let mut b = GraphBuilder::new();
    let x = b.input(1).unwrap();
    let h = b.affine(x, Matrix::new(2, 1, vec![1.0, -1.0]).unwrap(), vec![-0.5, 0.5]).unwrap();
    let r = b.relu(h).unwrap();
    let y = b.affine(r, Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(), vec![0.0]).unwrap();
    b.finish(y).unwrap()
}

struct Fixtures {
    dir: tempfile::TempDir,
}

impl Fixtures {
    fn new() -> Self {
        let f = Fixtures { dir: tempfile::tempdir().unwrap() };
        export_model(&scalar(1.0, 0.0), &f.path("identity.onnx")).unwrap();
        export_model(&scalar(-1.0, 0.0), &f.path("neg_identity.onnx")).unwrap();
        export_model(&scalar(0.0, 2.5), &f.path("constant.onnx")).unwrap();
        export_model(&scalar(2.0, 0.0), &f.path("double.onnx")).unwrap();
        save_graph(&abs_shifted(), &f.path("abs.json")).unwrap();
        save_graph(&linear(&[vec![0.0, 1.0], vec![0.0, -1.0]], vec![0.5, 0.0]), &f.path("blind.json")).unwrap();
        f.spec("mono.json", r#"{"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]}}"#);
        f.spec(
            "katz.json",
            r#"{"spec": "robustness_katz", "domain": {"lo": [0.0], "hi": [1.0]}, "delta": 0.1, "epsilon": 0.05}"#,
        );
        f.spec("lip2.json", r#"{"spec": "lipschitz", "domain": {"lo": [0.0], "hi": [1.0]}, "lipschitz": 2.0}"#);
        f.spec("lip1.json", r#"{"spec": "lipschitz", "domain": {"lo": [0.0], "hi": [1.0]}, "lipschitz": 1.0}"#);
        f.spec(
            "fair.json",
            r#"{"spec": "dependency_fairness", "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}, "attribute_values": 2}"#,
        );
        f.spec(
            "mono_settings.json",
            r#"{"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]},
                "verify": {"seed": 7, "tolerance": 1e-6, "max_regions": 50}}"#,
        );
        f.spec("broken.json", r#"{"spec": "monotonicity", "domain": {"lo": [0.0]}}"#);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn spec(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    let f = Fixtures::new();
    let cases = [
        ("neg_identity.onnx", "mono.json", 0),
        ("identity.onnx", "mono.json", 1),
        ("constant.onnx", "katz.json", 0),
        ("identity.onnx", "katz.json", 1),
        ("double.onnx", "lip2.json", 0),
        ("double.onnx", "lip1.json", 1),
        ("blind.json", "fair.json", 0),
    ];
    for (model, spec, expected) in cases {
        let out = hyperspec(&["verify", &f.p(model), &f.p(spec), "--json"]);
        assert_eq!(code(&out), expected, "{model} {spec}: {}", String::from_utf8_lossy(&out.stderr));
        let v = stdout_json(&out);
        assert_eq!(v["verdict"], ["sat", "violated"][expected as usize]);
        assert!(v["regions"].is_u64() && v["time_ms"].is_u64());
    }
}

#[test]
fn violated_verdict_carries_the_decoded_pair() {
    let f = Fixtures::new();
    let out = hyperspec(&["verify", &f.p("identity.onnx"), &f.p("mono.json"), "--json"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    let inputs = v["decoded"]["inputs"].as_array().unwrap();
    let outputs = v["decoded"]["outputs"].as_array().unwrap();
    assert_eq!((inputs.len(), outputs.len()), (2, 2));
    assert!(inputs[1][0].as_f64().unwrap() > inputs[0][0].as_f64().unwrap());
    assert!(v["sat_value"].as_f64().unwrap() < -1e-9);

    let text = hyperspec(&["verify", &f.p("identity.onnx"), &f.p("mono.json")]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.starts_with("violated"), "{text}");
    assert!(text.contains("copy 1"));
}

#[test]
fn exhausted_budget_is_unknown() {
    let f = Fixtures::new();
    let out = hyperspec(&["verify", &f.p("abs.json"), &f.p("lip1.json"), "--max-regions", "1", "--json"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "unknown");
    assert!(v["regions_remaining"].as_u64().unwrap() > 0);
    // with the default budget the same problem is decided
    let out = hyperspec(&["verify", &f.p("abs.json"), &f.p("lip1.json")]);
    assert_eq!(code(&out), 0);
}

#[test]
fn errors_exit_with_three() {
    let f = Fixtures::new();
    let missing = f.p("missing.onnx");
    let cases: Vec<Vec<String>> = vec![
        vec!["verify".into(), missing, f.p("mono.json")],
        vec!["verify".into(), f.p("identity.onnx"), f.p("broken.json")],
        vec!["verify".into(), f.p("identity.onnx"), f.p("fair.json")],
        vec!["verify".into(), f.p("identity.onnx"), f.p("mono.json"), "--tolerance".into(), "-1".into()],
        vec!["verify".into(), f.p("identity.onnx")],
        vec!["frobnicate".into()],
        vec!["inspect".into(), f.p("mono.json")],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = hyperspec(&args);
        assert_eq!(code(&out), 3, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn oracle_cross_check_is_reported() {
    let f = Fixtures::new();
    for (model, spec, expected) in [("abs.json", "lip1.json", 0), ("double.onnx", "lip1.json", 1)] {
        let out = hyperspec(&["verify", &f.p(model), &f.p(spec), "--oracle", "--json"]);
        assert_eq!(code(&out), expected);
        let v = stdout_json(&out);
        assert_eq!(v["oracle"]["agrees"], true);
        assert_eq!(v["oracle"]["verdict"], v["verdict"]);
    }
}

#[test]
fn falsify_exit_codes() {
    let f = Fixtures::new();
    let out = hyperspec(&["falsify", &f.p("identity.onnx"), &f.p("mono.json"), "--budget", "1000", "--json"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["verdict"], "violated");
    let out = hyperspec(&["falsify", &f.p("neg_identity.onnx"), &f.p("mono.json"), "--budget", "1000"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn falsify_is_reproducible_with_a_seed() {
    let f = Fixtures::new();
    let run = |seed: &str| {
        let out = hyperspec(&["falsify", &f.p("abs.json"), &f.p("katz.json"), "--seed", seed, "--json"]);
        let mut v = stdout_json(&out);
        v["time_ms"] = Value::Null;
        (code(&out), v)
    };
    assert_eq!(run("5"), run("5"));
}

#[test]
fn flags_override_spec_file_settings() {
    let f = Fixtures::new();
    let out = hyperspec(&["verify", &f.p("neg_identity.onnx"), &f.p("mono_settings.json"), "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let config = &manifest(&out)["manifest"]["config"];
    assert_eq!(config["seed"], 9);
    assert_eq!(config["tolerance"], 1e-6);
    assert_eq!(config["max_regions"], 50);
    assert_eq!(config["max_time_ms"], 300_000);
}

#[test]
fn every_run_writes_a_manifest() {
    let f = Fixtures::new();
    for args in [
        vec!["verify".to_string(), f.p("identity.onnx"), f.p("mono.json")],
        vec!["verify".to_string(), f.p("missing.onnx"), f.p("mono.json")],
        vec!["inspect".to_string(), f.p("abs.json")],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let m = manifest(&hyperspec(&args));
        assert_eq!(m["manifest"]["command"], args[0]);
        assert_eq!(m["manifest"]["version"], env!("CARGO_PKG_VERSION"));
        assert!(m["manifest"]["wall_time_ms"].is_u64());
    }
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn export_is_deterministic_and_inspectable() {
    let f = Fixtures::new();
    let (a, b) = (f.path("out_a"), f.path("out_b"));
    for out in [&a, &b] {
        let run = hyperspec(&["export", &f.p("identity.onnx"), &f.p("mono.json"), &out.display().to_string()]);
        assert_eq!(code(&run), 0);
    }
    for name in ["model.onnx", "property.vnnlib", "composed.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let property = String::from_utf8(read(&a, "property.vnnlib")).unwrap();
    assert_eq!(property.matches("(declare-const X_").count(), 2);
    assert_eq!(property.matches("(assert (>= X_").count() + property.matches("(assert (<= X_").count(), 4);
    assert!(property.contains("(assert (< Y_0 0.0))"));

    let composed = a.join("composed.json").display().to_string();
    let out = hyperspec(&["inspect", &composed, "--json"]);
    assert_eq!(code(&out), 0);
    let stats = stdout_json(&out);
    let graph = hyperspec::io::load_graph(&a.join("composed.json")).unwrap();
    assert_eq!(stats["nodes"], graph.len());
    assert_eq!(stats["input_dim"], 2);
    assert_eq!(stats["output_dim"], 1);

    // the exported model is the same function as the composed graph
    let model = a.join("model.onnx").display().to_string();
    let out = hyperspec(&["inspect", &model, "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["input_dim"], 2);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&hyperspec(&["--help"])), 0);
    assert_eq!(code(&hyperspec(&["--version"])), 0);
}
