use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hitchin_lattice::io::{parse_csv, DataFile};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhitchin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve_to(dir: &TempDir, name: &str, n1: usize, n2: usize) -> PathBuf {
    let out = path(dir, name);
    let r = run(&[
        "solve",
        "--n1",
        &n1.to_string(),
        "--n2",
        &n2.to_string(),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    out
}

#[test]
fn solve_two_by_two() {
    let dir = TempDir::new().unwrap();
    let file = DataFile::read(&solve_to(&dir, "a.json", 2, 2)).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for v in file.f.iter().chain(file.g.iter()) {
        assert!((v - h).abs() < 1e-12, "{v}");
    }
    assert!((file.a0.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(file.b0, Some(1.0));
}

#[test]
fn solve_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = solve_to(&dir, "a.json", 3, 4);
    let b = solve_to(&dir, "b.json", 3, 4);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    let seeded = |name: &str| {
        let out = path(&dir, name);
        let r = run(&[
            "solve",
            "--n1",
            "3",
            "--n2",
            "3",
            "--seed",
            "11",
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&r), 0);
        std::fs::read(out).unwrap()
    };
    assert_eq!(seeded("c.json"), seeded("d.json"));
}

#[test]
fn solve_single_column_is_constant() {
    let dir = TempDir::new().unwrap();
    let file = DataFile::read(&solve_to(&dir, "a.json", 1, 5)).unwrap();
    let first = file.g[(0, 0)];
    for v in file.g.iter() {
        assert!((v - first).abs() < 1e-12);
    }
    assert!((file.a0.unwrap() - first).abs() < 1e-12);
    assert!((file.b0.unwrap() - first).abs() < 1e-12);
}

#[test]
fn solve_fifty_has_diagonal_symmetry() {
    let dir = TempDir::new().unwrap();
    let file = DataFile::read(&solve_to(&dir, "a.json", 50, 50)).unwrap();
    for j in 0..49 {
        for k in 0..50 {
            assert!((file.g[(j, k)] - file.f[(k, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn solve_with_sum_normalization() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "a.json");
    let r = run(&[
        "solve",
        "--n1",
        "2",
        "--n2",
        "3",
        "--normalize",
        "sum",
        "--sum-value",
        "4",
        "--continuation",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let data = DataFile::read(&out).unwrap().to_instanton().unwrap();
    assert!((data.sum_of_squares() - 4.0).abs() < 1e-10);
}

#[test]
fn non_convergence_exit_code() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "a.json");
    let r = run(&[
        "solve",
        "--n1",
        "4",
        "--n2",
        "4",
        "--max-iter",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("best scaled residual"));
    assert!(!out.exists());
}

#[test]
fn verify_solved_files() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 2, 4);
    let r = run(&["verify", "--in", s(&f)]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    assert!(stdout(&r).contains("verify: ok"));

    let f = solve_to(&dir, "b.json", 2, 2);
    let r = run(&[
        "verify",
        "--in",
        s(&f),
        "--adhm",
        "--genericity",
        "--tol",
        "1e-14",
    ]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    assert!(stdout(&r).contains("pattern=ok"));
}

#[test]
fn verify_flags_zeroed_entry() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 3, 3);
    let mut file = DataFile::read(&f).unwrap();
    *file.f.get_mut(1, 0).unwrap() = 0.0;
    file.write(&f).unwrap();
    let r = run(&["verify", "--in", s(&f)]);
    assert_eq!(code(&r), 3);
    let text = stdout(&r);
    assert!(text.contains("non-positive F[2,1]"), "{text}");
    assert!(
        text.contains("offending moment residual at (2,1)"),
        "{text}"
    );
    assert!(text.contains("offending holomorphic residual"), "{text}");
}

#[test]
fn verify_reports_schema_path() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "bad.json");
    std::fs::write(
        &f,
        r#"{"n1": 2, "n2": 2, "p": 1, "F": [[1.0], ["x"]], "G": [[1.0, 1.0]]}"#,
    )
    .unwrap();
    let r = run(&["verify", "--in", s(&f)]);
    assert_eq!(code(&r), 4);
    assert!(stderr(&r).contains("$.F[1][0]"), "{}", stderr(&r));

    let r = run(&["verify", "--in", s(&path(&dir, "missing.json"))]);
    assert_eq!(code(&r), 4);
}

#[test]
fn lax_interior_mode_on_solution() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 3, 3);
    let r = run(&["lax", "--in", s(&f), "--zetas", "0,1,i"]);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    let text = stdout(&r);
    assert!(text.contains("c1 corner (1,1)"));
    assert!(text.contains("c1 corner (3,3)"));
    assert_eq!(text.matches("interior bound").count(), 3);
}

#[test]
fn lax_random_field_is_not_certified() {
    let r = run(&[
        "lax",
        "--random",
        "3",
        "3",
        "2",
        "7",
        "--zetas",
        "0,-1,2+3i",
    ]);
    assert_eq!(code(&r), 3);
    let text = stdout(&r);
    assert!(text.contains("certified: no"));
    assert_eq!(text.matches("certificate=").count(), 3);
    assert_eq!(
        stdout(&run(&[
            "lax",
            "--random",
            "3",
            "3",
            "2",
            "7",
            "--zetas",
            "0,-1,2+3i"
        ])),
        text
    );
}

#[test]
fn lax_rejects_bad_zeta() {
    let r = run(&["lax", "--random", "2", "2", "1", "0", "--zetas", "1+"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("complex"));
    let r = run(&["lax", "--zetas", "1"]);
    assert_eq!(code(&r), 1);
}

#[test]
fn converge_holomorphic() {
    let dir = TempDir::new().unwrap();
    for family in ["exp", "quadratic"] {
        let out = path(&dir, &format!("{family}.csv"));
        let r = run(&[
            "converge",
            "--mode",
            "holomorphic",
            "--family",
            family,
            "--ns",
            "16,32,64,128",
            "--min-order",
            "0.9",
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
        let text = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,scaled_residual,max_residual");
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 5);
        assert!(text.contains("# fitted_order="));
    }
}

#[test]
fn converge_nahm_writes_table() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "nahm.csv");
    let r = run(&[
        "converge",
        "--mode",
        "nahm",
        "--ns",
        "8,16,32",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,max_error,"));
    assert!(text.contains("# fitted_order="));
    assert!(text.contains("# calibration beta="));
}

#[test]
fn converge_needs_three_sizes() {
    let r = run(&["converge", "--mode", "holomorphic", "--ns", "16,32"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("at least 3"));
}

#[test]
fn export_extents_and_values() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 2, 2);
    let r = run(&["export", "--in", s(&f), "--field", "F"]);
    assert_eq!(code(&r), 0);
    let rows = parse_csv(&stdout(&r)).unwrap();
    assert_eq!(rows.len(), 2);
    for (_, _, v) in rows {
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    let f = solve_to(&dir, "b.json", 50, 50);
    let out = path(&dir, "f.csv");
    let r = run(&["export", "--in", s(&f), "--field", "F", "--out", s(&out)]);
    assert_eq!(code(&r), 0);
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 50 * 49);
    assert_eq!((rows[0].0, rows[0].1), (1, 1));
    assert_eq!((rows[1].0, rows[1].1), (1, 2));
    assert_eq!(rows.last().map(|r| (r.0, r.1)), Some((50, 49)));
}

#[test]
fn export_json_and_csv_agree_exactly() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 4, 3);
    let csv = stdout(&run(&["export", "--in", s(&f), "--field", "G"]));
    let json = stdout(&run(&[
        "export",
        "--in",
        s(&f),
        "--field",
        "G",
        "--format",
        "json",
    ]));
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let parsed = parsed.as_array().unwrap();
    let rows = parse_csv(&csv).unwrap();
    assert_eq!(parsed.len(), rows.len());
    let file = DataFile::read(&f).unwrap();
    for ((j, k, v), p) in rows.iter().zip(parsed) {
        assert_eq!(p["j"].as_u64(), Some(*j as u64));
        assert_eq!(p["k"].as_u64(), Some(*k as u64));
        assert_eq!(v.to_bits(), p["value"].as_f64().unwrap().to_bits());
        assert_eq!(v.to_bits(), file.g[(j - 1, k - 1)].to_bits());
    }
}

#[test]
fn export_rejects_unknown_field() {
    let dir = TempDir::new().unwrap();
    let f = solve_to(&dir, "a.json", 2, 2);
    let r = run(&["export", "--in", s(&f), "--field", "H"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("unknown field"));
}
