use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jprox::experiments::{InstanceFile, Manifest};
use jprox::linalg::{DenseMatrix, DenseVector};
use jprox::problem::{Block, BlockObjective, BlockProblem, QuadraticBlock};

fn jprox(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jprox"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn generate_desk(dir: &Path) {
    let out = jprox(
        dir,
        &[
            "generate",
            "lcqp",
            "--N",
            "3",
            "--m",
            "10",
            "--n",
            "5",
            "--seed",
            "0",
            "--output",
            "inst.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn strip_elapsed(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').unwrap().0)
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn generate_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = jprox(
        dir.path(),
        &[
            "generate", "lcqp", "--N", "3", "--m", "10", "--n", "5", "--output", "i.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("c_A ="));
    assert!(text.contains("alpha ="));
    let file = InstanceFile::read(&dir.path().join("i.json")).unwrap();
    assert_eq!(file.kind.as_deref(), Some("lcqp"));
    assert!(file.optimum().is_some());
}

#[test]
fn invalid_flags_exit_two_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let cases: [(&[&str], &str); 5] = [
        (&["generate", "lcqp", "--N", "0", "--m", "3", "--n", "2"], "--N"),
        (&["generate", "lcqp", "--N", "2", "--n", "2"], "--m"),
        (&["solve", "--input", "inst.json", "--rho", "-1"], "--rho"),
        (&["solve", "--input", "inst.json", "--max-iters", "0"], "--max-iters"),
        (&["solve", "--input", "inst.json", "--tau", "-2"], "--tau"),
    ];
    for (args, flag) in cases {
        let out = jprox(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(code(&jprox(dir.path(), &["solve", "--bogus"])), 2);
    assert_eq!(
        code(&jprox(
            dir.path(),
            &["solve", "--input", "inst.json", "--policy", "weird"]
        )),
        2
    );
}

#[test]
fn io_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&jprox(dir.path(), &["solve", "--input", "missing.json"])), 3);
    fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(
        code(&jprox(
            dir.path(),
            &["certify", "--input", "bad.json", "--rho", "1", "--gamma", "1"]
        )),
        3
    );
    assert_eq!(code(&jprox(dir.path(), &["report", "--input", "nowhere"])), 3);
    fs::create_dir(dir.path().join("empty")).unwrap();
    assert_eq!(code(&jprox(dir.path(), &["report", "--input", "empty"])), 3);
}

#[test]
fn certify_writes_certificate_and_rejects_gamma() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let ok = jprox(
        dir.path(),
        &["certify", "--input", "inst.json", "--rho", "1", "--gamma", "1"],
    );
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let cert: jprox::certification::Certificate =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert!(cert.passed);
    assert_eq!(cert.seed, Some(0));
    assert!(cert.sigma.unwrap() < 1.0);

    let bad = jprox(
        dir.path(),
        &["certify", "--input", "inst.json", "--rho", "1", "--gamma", "2.5"],
    );
    assert_eq!(code(&bad), 4);
    assert!(stderr(&bad).contains("gamma out of (0,2)"));

    let none = jprox(
        dir.path(),
        &[
            "certify",
            "--input",
            "inst.json",
            "--rho",
            "1",
            "--gamma",
            "1",
            "--policy",
            "none",
        ],
    );
    assert_eq!(code(&none), 4);
}

#[test]
fn solve_trace_format_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let args = [
        "solve",
        "--input",
        "inst.json",
        "--rho",
        "1",
        "--gamma",
        "1.5",
        "--max-iters",
        "200",
        "--plot",
    ];
    let out = jprox(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(first.starts_with("k,dis,phi,primal_residual,elapsed_seconds\n"));
    assert_eq!(first.lines().count(), 202);
    let row: Vec<&str> = first.lines().nth(1).unwrap().split(',').collect();
    // certified jprox run fills phi; 17 significant digits
    assert!(!row[2].is_empty());
    assert_eq!(row[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert!(fs::read_to_string(dir.path().join("trace.svg"))
        .unwrap()
        .contains("<polyline"));

    assert_eq!(code(&jprox(dir.path(), &args)), 0);
    let second = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(strip_elapsed(&first), strip_elapsed(&second));
}

#[test]
fn baseline_methods_leave_phi_empty() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    for method in ["jacobi-plain", "gauss-seidel", "dual-decomp"] {
        let out = jprox(
            dir.path(),
            &[
                "solve",
                "--input",
                "inst.json",
                "--method",
                method,
                "--max-iters",
                "20",
                "--output",
                "b.csv",
            ],
        );
        assert!(matches!(code(&out), 0 | 5), "{method}: {}", stderr(&out));
        let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
        assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("")));
    }
}

#[test]
fn divergence_exits_five_and_keeps_trace() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = (0..6)
        .map(|_| Block {
            objective: BlockObjective::Quadratic(
                QuadraticBlock::new(DenseMatrix::diag(&[0.01]), DenseVector::zeros(1)).unwrap(),
            ),
            a: DenseMatrix::identity(1),
        })
        .collect();
    let p = BlockProblem::new(blocks, DenseVector::from_vec(vec![1.0])).unwrap();
    InstanceFile::from_problem(&p)
        .unwrap()
        .write(&dir.path().join("div.json"))
        .unwrap();
    let out = jprox(
        dir.path(),
        &[
            "solve",
            "--input",
            "div.json",
            "--method",
            "jacobi-plain",
            "--rho",
            "10",
            "--max-iters",
            "4000",
        ],
    );
    assert_eq!(code(&out), 5);
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let out = jprox(
        dir.path(),
        &["sweep", "--input", "inst.json", "--output", "sw", "--max-iters", "300"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = Manifest::read(&dir.path().join("sw")).unwrap();
    assert_eq!(manifest.cells.len(), 16);
    assert_eq!(manifest.config.rho_grid, vec![0.03, 1.0, 5.0, 10.0]);
    for cell in &manifest.cells {
        assert!(dir.path().join("sw").join(cell.trace_file.as_ref().unwrap()).exists());
    }

    let out = jprox(dir.path(), &["report", "--input", "sw", "--output", "figs"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let svgs = fs::read_dir(dir.path().join("figs"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 8);
    let rates = fs::read_to_string(dir.path().join("figs/rates.txt")).unwrap();
    assert_eq!(rates.lines().count(), 17);

    fs::remove_file(
        dir.path()
            .join("sw")
            .join(manifest.cells[0].trace_file.as_ref().unwrap()),
    )
    .unwrap();
    assert_eq!(code(&jprox(dir.path(), &["report", "--input", "sw"])), 3);
}

#[test]
fn sweep_grid_flags() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let out = jprox(
        dir.path(),
        &[
            "sweep",
            "--input",
            "inst.json",
            "--rho-grid",
            "1,2",
            "--gamma-grid",
            "0.5",
            "--max-iters",
            "50",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(Manifest::read(&dir.path().join("sweep")).unwrap().cells.len(), 2);
    let out = jprox(dir.path(), &["sweep", "--input", "inst.json", "--rho-grid", "1,-2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--rho-grid"));
}

#[test]
fn explicit_policy_uses_stored_matrices() {
    let dir = tempfile::tempdir().unwrap();
    generate_desk(dir.path());
    let out = jprox(
        dir.path(),
        &[
            "solve",
            "--input",
            "inst.json",
            "--policy",
            "explicit",
            "--max-iters",
            "30",
        ],
    );
    // the generator's random P_i carry no certificate and may diverge
    assert!(matches!(code(&out), 0 | 5), "{}", stderr(&out));
    assert!(stderr(&out).contains("not certified"));
    assert!(
        fs::read_to_string(dir.path().join("trace.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );
    let out = jprox(dir.path(), &["generate", "ra", "--N", "4", "--output", "ra.json"]);
    assert_eq!(code(&out), 0);
    let out = jprox(dir.path(), &["solve", "--input", "ra.json", "--policy", "explicit"]);
    assert_eq!(code(&out), 2);
}
