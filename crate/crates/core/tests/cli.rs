use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sepcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepcrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn generate(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(format!("{name}.txt"));
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let o = sepcrit(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_reference_state_reports_pair_values() {
    let dir = TempDir::new().unwrap();
    let file = generate(&dir, "bound", &["bound-2x4"]);
    let o = sepcrit(&["--json", "classify", s(&file)]);
    let v = json(&o);
    let a: Vec<f64> = v["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["a_value"].as_f64().unwrap())
        .collect();
    assert_eq!(a.len(), 3);
    assert!(a[0].abs() < 1e-12);
    assert!((a[1] + 0.25).abs() < 1e-12 && (a[2] + 0.25).abs() < 1e-12);
    assert!(v["ppt_min_eigenvalue"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["pairs"][2]["p"], 2);
    assert_eq!(v["pairs"][2]["q"], 4);
    // the state is separable, so a certificate is the correct outcome
    assert_eq!(v["verdict"], "SeparableCertified");
    assert_eq!(code(&o), 0);
}

#[test]
fn classify_bell_is_entangled() {
    let dir = TempDir::new().unwrap();
    let file = generate(&dir, "bell", &["bell"]);
    let o = sepcrit(&["--json", "classify", s(&file)]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["verdict"], "EntangledByPairCriterion");
    assert_eq!(v["violated_pair"], 1);
    assert!((v["pairs"][0]["a_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["search"].is_null());

    let human = sepcrit(&["classify", s(&file)]);
    assert_eq!(code(&human), 1);
    assert!(String::from_utf8_lossy(&human.stdout)
        .contains("verdict: EntangledByPairCriterion (pair 1)"));
}

#[test]
fn classify_product_and_werner() {
    let dir = TempDir::new().unwrap();
    let product = generate(&dir, "product", &["product"]);
    assert_eq!(code(&sepcrit(&["classify", s(&product)])), 0);
    let sep = generate(&dir, "w02", &["werner", "--p", "0.2"]);
    assert_eq!(code(&sepcrit(&["classify", s(&sep)])), 0);
    let ent = generate(&dir, "w05", &["werner", "--p", "0.5"]);
    assert_eq!(code(&sepcrit(&["classify", s(&ent)])), 1);
}

#[test]
fn machine_readable_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let file = generate(
        &dir,
        "sep",
        &[
            "random-separable",
            "--m",
            "2",
            "--n",
            "3",
            "--terms",
            "3",
            "--seed",
            "4",
        ],
    );
    let args = [
        "--json",
        "classify",
        s(&file),
        "--restarts",
        "8",
        "--seed",
        "3",
    ];
    let a = sepcrit(&args);
    let b = sepcrit(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&a), code(&b));
}

#[test]
fn ppt_closed_forms() {
    let dir = TempDir::new().unwrap();
    let w = generate(&dir, "w", &["werner", "--p", "0.5"]);
    let o = sepcrit(&["--json", "ppt", s(&w)]);
    assert_eq!(code(&o), 1);
    assert!((json(&o)["ppt_min_eigenvalue"].as_f64().unwrap() + 0.125).abs() < 1e-12);

    let iso = generate(&dir, "iso", &["isotropic", "--d", "2", "--f", "0.5"]);
    let o = sepcrit(&["--json", "ppt", s(&iso)]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["ppt_min_eigenvalue"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn pairs_listing_for_4x4() {
    let o = sepcrit(&["--json", "pairs", "4", "4"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let pairs = v["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 9);
    let order: Vec<(u64, u64)> = pairs
        .iter()
        .map(|p| (p["p"].as_u64().unwrap(), p["q"].as_u64().unwrap()))
        .collect();
    assert_eq!(order[..4], [(2, 2), (3, 2), (4, 2), (2, 3)]);
    // pair (p, q) = (3, 4): -1 at (1, 12), +1 at (4, 9)
    let entries: Vec<(u64, u64, i64)> = pairs[7]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["row"].as_u64().unwrap(),
                e["col"].as_u64().unwrap(),
                e["value"].as_i64().unwrap(),
            )
        })
        .collect();
    for want in [(1, 12, -1), (12, 1, -1), (4, 9, 1), (9, 4, 1)] {
        assert!(entries.contains(&want), "{entries:?} lacks {want:?}");
    }
}

#[test]
fn spectrum_with_reference_basis() {
    let dir = TempDir::new().unwrap();
    let bound = generate(&dir, "bound", &["bound-2x4"]);
    let o = sepcrit(&["--json", "spectrum", s(&bound), "--basis", "paper"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let tau = &v["pairs"][0]["tau"];
    assert!((tau[1][3][0].as_f64().unwrap() - 0.125).abs() < 1e-12);
    assert!((tau[2][2][0].as_f64().unwrap() + 0.25).abs() < 1e-12);
    let lambdas: Vec<f64> = v["pairs"][0]["lambdas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (a, b) in lambdas.iter().zip([0.25, 0.125, 0.125, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }

    let bell = generate(&dir, "bell", &["bell"]);
    let o = sepcrit(&["spectrum", s(&bell), "--basis", "paper"]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bound-2x4"));
}

#[test]
fn decompose_and_search() {
    let dir = TempDir::new().unwrap();
    let bound = generate(&dir, "bound", &["bound-2x4"]);
    let o = sepcrit(&["--json", "decompose", s(&bound), "--pair", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["members"].as_array().unwrap().len(), 8);
    assert!(v["max_pair_residual"].as_f64().unwrap() <= 1e-10);
    assert!(v["reconstruction_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(code(&sepcrit(&["decompose", s(&bound), "--pair", "4"])), 65);

    let bell = generate(&dir, "bell", &["bell"]);
    assert_eq!(code(&sepcrit(&["decompose", s(&bell), "--pair", "1"])), 1);

    let w = generate(&dir, "w", &["werner", "--p", "0.2"]);
    let o = sepcrit(&["--json", "search", s(&w), "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["certificate"].is_array());
}

#[test]
fn emit_constraints_text() {
    let dir = TempDir::new().unwrap();
    let bound = generate(&dir, "bound", &["bound-2x4"]);
    let o = sepcrit(&[
        "emit-constraints",
        s(&bound),
        "--basis",
        "paper",
        "--normalize",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "pair 1: 2 2");
    assert!(lines[1].starts_with("2 4 1.0000000000000000e0 "));
    assert!(lines[2].starts_with("3 3 -1.0000000000000000e0 "));
    assert_eq!(lines.iter().filter(|l| l.starts_with("pair ")).count(), 3);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&sepcrit(&[])), 64);
    assert_eq!(code(&sepcrit(&["classify"])), 64);
    assert_eq!(code(&sepcrit(&["classify", "/nonexistent/file.txt"])), 66);

    let bound = generate(&dir, "bound", &["bound-2x4"]);
    let text = std::fs::read_to_string(&bound).unwrap();
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    let truncated = dir.path().join("cut.txt");
    std::fs::write(&truncated, cut).unwrap();
    let o = sepcrit(&["classify", s(&truncated)]);
    assert_eq!(code(&o), 65);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 6"));

    assert_eq!(
        code(&sepcrit(&[
            "gen", "random", "--m", "2", "--n", "2", "--rank", "9"
        ])),
        65
    );
}
