use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsebench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sparsebench-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn phase_writes_csv_and_svg() {
    let csv = temp_path("phase.csv");
    let svg = temp_path("phase.svg");
    let out = run(&[
        "phase", "--ensemble", "gaussian", "--n", "32", "--r", "2", "--k-min", "8", "--k-max", "24", "--k-step",
        "8", "--trials", "5", "--seed", "7", "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("ensemble,n,r,k,trials,successes,failures,solver_failures,success_rate,mean_l2_error,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("gaussian,32,2,8,5,"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn phase_is_deterministic_on_stdout() {
    let args = [
        "phase", "--ensemble", "fourier", "--n", "16", "--r", "1", "--k-min", "4", "--k-max", "8", "--k-step", "4",
        "--trials", "4", "--seed", "3", "--amp", "gaussian",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().nth(1).unwrap().starts_with("fourier,16,1,4,4,"));
}

#[test]
fn recover_reports_and_dumps_lp() {
    let lp = temp_path("bp.lp");
    let out = run(&[
        "recover", "--ensemble", "gaussian", "--n", "64", "--r", "2", "--k", "32", "--seed", "1", "--dump-lp",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("support,l2_error,l1_objective,verdict"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields.len(), 4);
    assert_eq!(fields[0].split(' ').count(), 2);
    assert_eq!(fields[3], "exact");
    let dump = std::fs::read_to_string(&lp).unwrap();
    assert!(dump.contains("\nA 32 128\n") && dump.contains("\nbounds\n"));
    let parsed = sparsebench::recovery::LinearProgram::from_text(&dump).unwrap();
    assert_eq!(parsed.objective.len(), 128);
}

#[test]
fn ortho_ensemble_needs_matrix_file() {
    let out = run(&["recover", "--ensemble", "ortho", "--n", "4", "--r", "1", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let path = temp_path("hadamard.txt");
    std::fs::write(
        &path,
        "4,4,real\n0.5,0.5,0.5,0.5\n0.5,-0.5,0.5,-0.5\n0.5,0.5,-0.5,-0.5\n0.5,-0.5,-0.5,0.5\n",
    )
    .unwrap();
    let out = run(&[
        "recover", "--ensemble", "ortho", "--matrix-file", path.to_str().unwrap(), "--n", "4", "--r", "1", "--k", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).ends_with(",exact\n"));
}

#[test]
fn ric_exact_and_sampled() {
    let path = temp_path("diag.txt");
    std::fs::write(&path, "2,2,real\n1,0\n0,2\n").unwrap();
    let out = run(&["ric", "--matrix-file", path.to_str().unwrap(), "--r", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "r,mode,lambda_min,lambda_max,c_opt,delta,delta_3r,delta_4r,verdict\n1,exact,1,4,2.5,0.6,,,\n"
    );

    let path = temp_path("eye.txt");
    std::fs::write(&path, "4,4,complex\n1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n").unwrap();
    let out = run(&["ric", "--matrix-file", path.to_str().unwrap(), "--r", "1", "--exact"]);
    assert_eq!(stdout(&out).lines().nth(1), Some("1,exact,1,1,1,0,0,0,true"));
    let out = run(&["ric", "--matrix-file", path.to_str().unwrap(), "--r", "2", "--sampled", "10"]);
    assert_eq!(stdout(&out).lines().nth(1), Some("2,sampled(10),1,1,1,0,,,"));
}

#[test]
fn ric_budget_exceeded_is_usage_error() {
    let path = temp_path("wide.txt");
    let row = vec!["1"; 60].join(",");
    std::fs::write(&path, format!("30,60,real\n{}", format!("{row}\n").repeat(30))).unwrap();
    let out = run(&["ric", "--matrix-file", path.to_str().unwrap(), "--r", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sampled"));
}

#[test]
fn width_and_escape_rows() {
    let out = run(&["width", "--n", "256", "--r", "4", "--samples", "2000", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[..3], ["256", "4", "2000"]);
    let bound: f64 = fields[5].parse().unwrap();
    assert!((bound - 6.7284).abs() < 1e-4);

    let out = run(&["escape", "--k", "100", "--w", "5"]);
    let text = stdout(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "escape");
    assert!((fields[6].parse::<f64>().unwrap() - 0.103).abs() < 1e-3);
    let out = run(&["escape", "--k", "800", "--r", "2", "--n", "1024"]);
    let text = stdout(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "recovery");
    assert!((fields[6].parse::<f64>().unwrap() - 0.999983).abs() < 1e-5);
    assert_eq!(fields[7], "false");
}

#[test]
fn cone_check_and_maurey_rows() {
    let out = run(&["cone-check", "--n", "12", "--r", "1", "--k", "6", "--trials", "5", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));

    let out = run(&["maurey", "--n", "16", "--m", "8", "--trials", "20", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("16,8,20,"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["phase", "--n", "8"]).status.code(), Some(1));
    assert_eq!(run(&["escape", "--k", "5"]).status.code(), Some(1));
    assert_eq!(run(&["recover", "--ensemble", "hadamard", "--n", "8", "--r", "1", "--k", "4"]).status.code(), Some(1));
    assert_eq!(run(&["recover", "--n", "8", "--r", "1", "--k", "9"]).status.code(), Some(1));
    assert_eq!(run(&["width", "--n", "8", "--r", "2", "--samples", "10"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
