use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hmmf(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmmf"));
    if let Some(text) = config {
        let path = dir.join("run.cfg");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args);
    cmd.env_remove("HMMF_THREADS");
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn cell_values(csv: &str) -> Vec<f64> {
    csv.lines().filter(|l| l.starts_with("cell,")).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
}

#[test]
fn single_cell_square_matches_hand_elimination() {
    // p_σ = 0 on the boundary, so the consistent part vanishes and only the
    // stabilization acts: S_σ = -p_K, B = diag(|σ|/d) = 2 I, hence 8 p_K = |K| f.
    let dir = TempDir::new().unwrap();
    let o = hmmf(dir.path(), Some("source = one\n"), &["--mesh", "gen:1,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = cell_values(&read(dir.path(), "solution.csv"));
    assert_eq!(p.len(), 1);
    assert!((p[0] - 0.125).abs() < 1e-15);
    let summary = read(dir.path(), "summary.txt");
    assert!(summary.contains("unknowns = 1"));
    assert!(summary.contains("iterations = "));
    assert!(summary.contains("balance_defect = "));
}

#[test]
fn zero_source_gives_zero_outputs() {
    let dir = TempDir::new().unwrap();
    let o = hmmf(dir.path(), Some("formulation = mimetic\nsource = zero\n"), &["--mesh", "gen:4,3,0.1,2"]);
    assert_eq!(code(&o), 0);
    let csv = read(dir.path(), "solution.csv");
    for line in csv.lines().skip(1) {
        assert_eq!(line.rsplit(',').next().unwrap().parse::<f64>().unwrap(), 0.0, "{line}");
    }
}

#[test]
fn unknown_key_exits_one_with_the_key() {
    let dir = TempDir::new().unwrap();
    let o = hmmf(dir.path(), Some("formulation = hybrid\nstabilisation = mfe\n"), &["--mesh", "gen:2,2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stabilisation"));
}

#[test]
fn mesh_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.mesh");
    fs::write(&bad, "not a mesh\n").unwrap();
    assert_eq!(code(&hmmf(dir.path(), None, &["--mesh", bad.to_str().unwrap()])), 3);
    assert_eq!(code(&hmmf(dir.path(), None, &["--mesh", "gen:0,2"])), 3);
    assert_eq!(code(&hmmf(dir.path(), None, &["--mesh", "gen:x"])), 3);
}

#[test]
fn non_convergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let o = hmmf(dir.path(), Some("source = case-a\n"), &["--mesh", "gen:16,16", "--tol", "1e-300"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn equivalence_with_random_stabilization_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = "stabilization.preset = random(11, hybrid)\ntensor = case-b\nsource = case-b\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:8,8,0.15,4", "--command", "equivalence"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(dir.path(), "equivalence.txt");
    let max: f64 = report.lines().find_map(|l| l.strip_prefix("max = ")).unwrap().parse().unwrap();
    assert!(max <= 1e-9);
}

#[test]
fn mixed_strong_is_outside_the_family() {
    let dir = TempDir::new().unwrap();
    let cfg = "formulation = mixed\nstabilization.preset = mixed-strong(0.5)\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:4,4", "--command", "equivalence"]);
    assert_eq!(code(&o), 0);
    assert!(read(dir.path(), "equivalence.txt").contains("outside equivalence family"));
}

#[test]
fn mismatched_parameters_exit_four() {
    let dir = TempDir::new().unwrap();
    let cfg = "stabilization.preset = random(3)\ntensor = case-b\nsource = case-b\nequivalence.convert = false\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:8,8,0.15,4", "--command", "equivalence"]);
    assert_eq!(code(&o), 4);
    let max: f64 = read(dir.path(), "equivalence.txt").lines().find_map(|l| l.strip_prefix("max = ")).unwrap().parse().unwrap();
    assert!(max > 1e-9);
}

#[test]
fn two_point_check_and_inapplicable_path() {
    let dir = TempDir::new().unwrap();
    let cfg = "stabilization.preset = two-point\npoints = super-admissible\ntensor = case-c\nsource = one\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:16,16", "--command", "two-point"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = "stabilization.preset = two-point\ntensor = case-b\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:4,4", "--command", "two-point"]);
    assert_eq!(code(&o), 1);
    assert!(read(dir.path(), "two_point.txt").contains("inapplicable"));
}

#[test]
fn lifting_identities_on_a_perturbed_mesh() {
    let dir = TempDir::new().unwrap();
    let cfg = "formulation = mixed\nstabilization.preset = mfe\ntensor = case-b\nsource = case-b\n";
    let o = hmmf(dir.path(), Some(cfg), &["--mesh", "gen:6,6,0.2,8", "--command", "lifting"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "lifting.txt").contains("normal_trace = "));
}

#[test]
fn convergence_case_a_two_point_cartesian() {
    let dir = TempDir::new().unwrap();
    let cfg = "stabilization.preset = two-point\nsource = case-a\nfamily = 8,16,32\n";
    let o = hmmf(dir.path(), Some(cfg), &["--command", "convergence"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "convergence.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# case=case-a condensed=false"));
    assert_eq!(lines.next(), Some("h,theta,err_p,err_F,order_p,order_F"));
    for row in lines.skip(1) {
        let order_p = row.split(',').nth(4).unwrap();
        assert!(order_p == "exact" || order_p.parse::<f64>().unwrap() >= 1.8, "{row}");
    }
}

#[test]
fn convergence_needs_three_meshes() {
    let dir = TempDir::new().unwrap();
    let o = hmmf(dir.path(), Some("source = case-a\nfamily = 8\n"), &["--command", "convergence"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("need >= 3 meshes"));
}

#[test]
fn condensed_convergence_is_flagged() {
    let dir = TempDir::new().unwrap();
    let cfg = "stabilization.preset = two-point\nsource = case-b\ncondense = all\nfamily = 4,8,16\n";
    let o = hmmf(dir.path(), Some(cfg), &["--command", "convergence"]);
    assert_ne!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "convergence.csv").starts_with("# case=case-b condensed=true\n"));
}

#[test]
fn unmet_thresholds_exit_five() {
    let dir = TempDir::new().unwrap();
    let cfg = "source = case-a\nfamily = 4,8,16\norder_f_min = 5\n";
    let o = hmmf(dir.path(), Some(cfg), &["--command", "convergence"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = "formulation = mixed\nstabilization.preset = random(2, mixed)\ntensor = case-b\nsource = case-b\n";
    let args = ["--mesh", "gen:12,12,0.2,5"];
    assert_eq!(code(&hmmf(a.path(), Some(cfg), &args)), 0);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmmf"));
    let path = b.path().join("run.cfg");
    fs::write(&path, cfg).unwrap();
    let o = cmd.arg("--config").arg(path).arg("--out").arg(b.path().join("out")).args(args).env("HMMF_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
    for name in ["solution.csv", "summary.txt"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}
