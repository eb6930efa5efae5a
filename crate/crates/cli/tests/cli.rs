use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomoqubo"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = run(cwd, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn pipeline(cwd: &Path) {
    ok(
        cwd,
        &[
            "phantom",
            "--dir",
            "out",
            "--size",
            "16",
            "--blur",
            "0.8",
            "--thresholds",
            "0.1",
        ],
    );
    ok(
        cwd,
        &[
            "project",
            "--dir",
            "out",
            "--projections",
            "4",
            "--noise",
            "0.05",
            "--seed",
            "3",
        ],
    );
    ok(
        cwd,
        &[
            "build",
            "--dir",
            "out",
            "--a",
            "1",
            "--b",
            "1",
            "--phantom",
            "out/phantom.csv",
        ],
    );
    ok(cwd, &["build", "--dir", "out", "--a", "1", "--b", "0"]);
    ok(
        cwd,
        &[
            "solve",
            "--dir",
            "out",
            "--restarts",
            "20",
            "--sweeps",
            "1000",
            "--seed",
            "5",
        ],
    );
    ok(
        cwd,
        &[
            "solve",
            "--dir",
            "out",
            "--label",
            "qtr",
            "--restarts",
            "4",
            "--sweeps",
            "100",
        ],
    );
    ok(cwd, &["reconstruct", "--dir", "out"]);
    ok(cwd, &["reconstruct", "--dir", "out", "--label", "qtr"]);
    ok(cwd, &["baseline", "--dir", "out", "--method", "fbp"]);
    ok(cwd, &["baseline", "--dir", "out", "--method", "sart"]);
    ok(cwd, &["compare", "--dir", "out"]);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p: PathBuf = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn full_pipeline_reconstructs_the_phantom_exactly() {
    let tmp = TempDir::new().unwrap();
    pipeline(tmp.path());
    let out = tmp.path().join("out");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let rows = report.as_array().unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["FBP", "QCSTR", "QTR", "SART"]);

    let qcstr = &rows[1];
    assert_eq!(qcstr["abs_error"].as_f64().unwrap(), 0.0);
    assert_eq!(qcstr["error_free"], true);
    let achieved = qcstr["achieved_energy"].as_f64().unwrap();
    let target = qcstr["target_energy"].as_f64().unwrap();
    assert!((achieved - target).abs() <= 1e-6 * target.abs());
    for other in [&rows[0], &rows[3]] {
        assert!(other["abs_error"].as_f64().unwrap() > 0.0);
    }

    let table = fs::read_to_string(out.join("report.txt")).unwrap();
    let header = table.lines().next().unwrap();
    let order: Vec<usize> = ["SART", "FBP", "QTR", "QCSTR"]
        .iter()
        .map(|m| header.find(m).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{header}");
    assert!(table.lines().nth(1).unwrap().starts_with("4 projections"));
}

#[test]
fn repeated_pipelines_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(&a.path().join("out")), files(&b.path().join("out")));
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
}

#[test]
fn phantom_examples() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "phantom",
            "--kind",
            "shepp-logan",
            "--size",
            "30",
            "--levels",
            "1",
            "--blur",
            "0.8",
        ],
    );
    let rows = csv_rows(&tmp.path().join("phantom.csv"));
    assert_eq!((rows.len(), rows[0].len()), (30, 30));
    assert!(rows.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
    assert!(rows.iter().flatten().any(|&v| v == 1.0));
    let pgm = fs::read(tmp.path().join("phantom.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
    assert!(tmp.path().join("provenance_phantom.json").exists());

    ok(
        tmp.path(),
        &[
            "phantom", "--dir", "three", "--size", "60", "--levels", "1,2,3",
        ],
    );
    let rows = csv_rows(&tmp.path().join("three/phantom.csv"));
    assert_eq!((rows.len(), rows[0].len()), (60, 60));
    let mut seen: Vec<f64> = rows.into_iter().flatten().collect();
    seen.sort_by(f64::total_cmp);
    seen.dedup();
    assert!(
        seen.iter().all(|v| [0.0, 1.0, 2.0, 3.0].contains(v)),
        "{seen:?}"
    );
    assert!(seen.len() >= 3);
}

#[test]
fn phantom_from_image_file() {
    let tmp = TempDir::new().unwrap();
    let mut pgm = b"P5 4 4 255\n".to_vec();
    pgm.extend((0..16).map(|k| if k % 5 == 0 { 255u8 } else { 0 }));
    fs::write(tmp.path().join("src.pgm"), pgm).unwrap();
    ok(
        tmp.path(),
        &[
            "phantom", "--kind", "image", "--input", "src.pgm", "--size", "4",
        ],
    );
    let rows = csv_rows(&tmp.path().join("phantom.csv"));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(v, if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn missing_size_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["phantom", "--levels", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--size"));
    let out = run(tmp.path(), &["phantom", "--size", "8", "--levels", "2,1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn project_examples() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "12"]);
    ok(
        tmp.path(),
        &["project", "--in", "phantom.csv", "--projections", "3"],
    );
    let geom: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("geometry.json")).unwrap())
            .unwrap();
    let angles: Vec<f64> = geom["angles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_f64().unwrap())
        .collect();
    assert_eq!(angles, [0.0, 60.0, 120.0]);
    let sino = fs::read_to_string(tmp.path().join("sinogram.csv")).unwrap();
    assert!(sino.starts_with("# angles=3 bins="));
    assert_eq!(csv_rows(&tmp.path().join("sinogram.csv")).len(), 3);
    assert!(!tmp.path().join("sinogram_noisy.csv").exists());

    for dir in ["n1", "n2"] {
        ok(
            tmp.path(),
            &[
                "project",
                "--dir",
                dir,
                "--in",
                "phantom.csv",
                "--projections",
                "6",
                "--noise",
                "0.05",
                "--seed",
                "7",
            ],
        );
    }
    let a = fs::read(tmp.path().join("n1/sinogram_noisy.csv")).unwrap();
    let b = fs::read(tmp.path().join("n2/sinogram_noisy.csv")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, fs::read(tmp.path().join("n1/sinogram.csv")).unwrap());
}

#[test]
fn unreadable_input_is_an_io_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["project", "--in", "nowhere.csv", "--projections", "3"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));

    let out = run(tmp.path(), &["build"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sinogram.csv"));

    let out = run(tmp.path(), &["reconstruct", "--label", "qcstr"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("build_qcstr.json"));

    fs::write(tmp.path().join("bad.csv"), "1,2\n3,x\n").unwrap();
    let out = run(
        tmp.path(),
        &["project", "--in", "bad.csv", "--projections", "2"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn degenerate_weights_and_oversized_exact_solves_are_validation_errors() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "6"]);
    ok(tmp.path(), &["project", "--projections", "2"]);
    let out = run(tmp.path(), &["build", "--a", "0", "--b", "0"]);
    assert_eq!(code(&out), 3);
    let out = run(tmp.path(), &["build", "--a=-1"]);
    assert_eq!(code(&out), 3);

    ok(tmp.path(), &["build"]);
    let out = run(tmp.path(), &["solve", "--exact"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("36 variables"));
}

#[test]
fn unrepresentable_phantom_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "6", "--levels", "1,2,3"]);
    ok(tmp.path(), &["project", "--projections", "2"]);
    let out = run(
        tmp.path(),
        &["build", "--levels", "1", "--phantom", "phantom.csv"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn exact_solve_recovers_a_tiny_phantom() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("truth.csv"), "1,0,0\n1,1,0\n0,1,1\n").unwrap();
    ok(
        tmp.path(),
        &[
            "project",
            "--in",
            "truth.csv",
            "--projections",
            "3",
            "--bins",
            "10",
            "--bin-width",
            "0.5",
        ],
    );
    ok(tmp.path(), &["build", "--phantom", "truth.csv"]);
    ok(tmp.path(), &["solve", "--exact"]);
    ok(tmp.path(), &["reconstruct"]);
    assert_eq!(
        fs::read_to_string(tmp.path().join("recon_qcstr.csv")).unwrap(),
        fs::read_to_string(tmp.path().join("truth.csv")).unwrap()
    );
    let bits = fs::read_to_string(tmp.path().join("bits_qcstr.txt")).unwrap();
    assert_eq!(bits, "100110011\n");
    let solve: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("solve_qcstr.json")).unwrap())
            .unwrap();
    assert!(solve.get("elapsed_ms").is_none());
    assert_eq!(solve["bits"], "100110011");
}

#[test]
fn compare_with_only_fbp() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "8"]);
    ok(tmp.path(), &["project", "--projections", "5"]);
    ok(tmp.path(), &["baseline", "--method", "fbp"]);
    let stdout = ok(tmp.path(), &["compare", "--scenario", "five"]);
    let header = stdout.lines().next().unwrap();
    assert_eq!(
        header.split_whitespace().collect::<Vec<_>>(),
        ["scenario", "FBP"]
    );
    assert!(stdout.lines().nth(1).unwrap().starts_with("five"));
}

#[test]
fn compare_without_reconstructions_fails() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "8"]);
    let out = run(tmp.path(), &["compare"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("recon_"));
}

#[test]
fn timing_flag_adds_elapsed_time() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["phantom", "--size", "6"]);
    ok(tmp.path(), &["project", "--projections", "2"]);
    ok(tmp.path(), &["build", "--label", "t"]);
    ok(
        tmp.path(),
        &[
            "solve",
            "--label",
            "t",
            "--restarts",
            "2",
            "--sweeps",
            "10",
            "--timing",
            "--threads",
            "1",
        ],
    );
    let solve: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("solve_t.json")).unwrap())
            .unwrap();
    assert!(solve["elapsed_ms"].is_u64());
    assert_eq!(solve["restart_energies"].as_array().unwrap().len(), 2);
}
