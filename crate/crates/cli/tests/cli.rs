use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dendrowave::fixtures::eight_terminal_example;
use dendrowave::Dendrogram;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dendrowave"))
        .args(args)
        .current_dir(dir)
        .env_remove("DENDROWAVE_OUTDIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn example_tree(dir: &Path) -> PathBuf {
    write(dir, "example.json", &eight_terminal_example().to_json())
}

const EXAMPLE_C: &str = "\
label,q1,q2,q3,q4,q5,q6,q7
x1,1,1,0,0,1,0,1
x2,-1,1,0,0,1,0,1
x3,0,-1,0,0,1,0,1
x4,0,0,1,1,-1,0,1
x5,0,0,-1,1,-1,0,1
x6,0,0,0,-1,-1,0,1
x7,0,0,0,0,0,1,-1
x8,0,0,0,0,0,-1,-1
";

#[test]
fn demo_matches_golden_file() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["check", "--demo", "fig2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), include_str!("golden/example_demo.txt"));
}

#[test]
fn cluster_single_linkage_on_a_line() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "line.csv", "x\n0\n3\n4\n");
    let out = run(tmp.path(), &["cluster", "line.csv", "--linkage", "single", "--outdir", "out"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("rank 1: x2 + x3 at level 1"), "{text}");
    assert!(text.contains("rank 2: x1 + q1 at level 3"), "{text}");
    let d = Dendrogram::from_json(&fs::read_to_string(tmp.path().join("out/dendrogram.json")).unwrap()).unwrap();
    assert_eq!(d.levels(), Some(&[1.0, 3.0][..]));
    assert_eq!(
        fs::read_to_string(tmp.path().join("out/cophenetic.csv")).unwrap(),
        "label,x1,x2,x3\nx1,0,3,3\nx2,3,0,1\nx3,3,1,0\n"
    );
}

#[test]
fn cluster_rejects_degenerate_and_malformed_input() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "one.csv", "x\n1\n");
    let out = run(tmp.path(), &["cluster", "one.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("need n ≥ 2"), "{}", stderr(&out));

    write(tmp.path(), "bad.csv", "x,y\n1,2\n3,abc\n");
    let out = run(tmp.path(), &["cluster", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 2, column 2"), "{}", stderr(&out));
}

#[test]
fn indicator_transform_writes_the_branch_matrix() {
    let tmp = TempDir::new().unwrap();
    example_tree(tmp.path());
    write(tmp.path(), "ignored.csv", "x\n1\n");
    let out = run(
        tmp.path(),
        &["transform", "--tree", "example.json", "--mode", "indicator", "--data", "ignored.csv", "--check", "--outdir", "b"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning: --data is ignored in indicator mode"));
    assert_eq!(fs::read_to_string(tmp.path().join("b/C.csv")).unwrap(), EXAMPLE_C);
    let d = fs::read_to_string(tmp.path().join("b/D.csv")).unwrap();
    for row in d.lines().skip(1) {
        let sum: f64 = row.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!(sum.abs() < 1e-12, "{row}");
    }
}

fn max_error(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("max abs error:")).expect("error line");
    line["max abs error:".len()..].trim().parse().unwrap()
}

#[test]
fn transform_check_on_random_data() {
    let tmp = TempDir::new().unwrap();
    assert!(run(tmp.path(), &["generate", "--n", "8", "--m", "3", "--seed", "11", "--outdir", "g"]).status.success());
    for extra in [&[][..], &["--weighted"][..]] {
        let mut args = vec!["transform", "--tree", "g/tree.json", "--data", "g/data.csv", "--check", "--outdir", "b"];
        args.extend_from_slice(extra);
        let out = run(tmp.path(), &args);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(max_error(&stdout(&out)) < 1e-9);
        assert!(stdout(&out).contains("check: PASS"));
    }
}

fn sweep(text: &str) -> Vec<(usize, f64, f64)> {
    text.lines()
        .skip_while(|l| !l.starts_with("sweep:"))
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn filter_extremes_and_sweep() {
    let tmp = TempDir::new().unwrap();
    assert!(run(tmp.path(), &["generate", "--n", "10", "--m", "4", "--seed", "3", "--outdir", "g"]).status.success());
    assert!(run(tmp.path(), &["transform", "--tree", "g/tree.json", "--data", "g/data.csv", "--outdir", "b"]).status.success());

    let out = run(tmp.path(), &["filter", "b", "--rule", "keep-k", "--param", "9", "--outdir", "all"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("frobenius error: 0\n"), "{}", stdout(&out));

    let out = run(tmp.path(), &["filter", "b", "--rule", "keep-k", "--param", "0", "--sweep", "--outdir", "none"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let smooth = fs::read_to_string(tmp.path().join("b/smooth.csv")).unwrap();
    let smooth_row: Vec<&str> = smooth.lines().nth(1).unwrap().split(',').skip(1).collect();
    let rec = fs::read_to_string(tmp.path().join("none/reconstruction.csv")).unwrap();
    for row in rec.lines().skip(1) {
        let values: Vec<&str> = row.split(',').skip(1).collect();
        assert_eq!(values, smooth_row);
    }
    let table = sweep(&stdout(&out));
    assert_eq!(table.len(), 10);
    for pair in table.windows(2) {
        assert!(pair[1].1 <= pair[0].1, "energy error increased at k={}", pair[1].0);
    }
    assert_eq!(table.last().unwrap().1, 0.0);
    assert!(tmp.path().join("none/sweep.csv").exists());

    let out = run(tmp.path(), &["filter", "b", "--rule", "keep-k", "--param", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn padic_queries() {
    let tmp = TempDir::new().unwrap();
    example_tree(tmp.path());
    let out = run(tmp.path(), &["padic", "dist", "--tree", "example.json", "x1", "x2"]);
    assert_eq!(stdout(&out), "p^-1\n");
    let out = run(tmp.path(), &["padic", "dist", "--tree", "example.json", "q2", "q6"]);
    assert_eq!(stdout(&out), "p^-7\n");
    let out = run(tmp.path(), &["padic", "norm", "--tree", "example.json", "q4"]);
    assert_eq!(stdout(&out), "p^-4\n");

    let out = run(tmp.path(), &["padic", "-p", "2", "dilate", "--tree", "example.json", "--all", "--outdir", "dil"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("x1 +2^1+2^4+2^6"));
    assert!(stderr(&out).contains("p = 2"));
    let lifted = Dendrogram::from_json(&fs::read_to_string(tmp.path().join("dil/dilated.json")).unwrap()).unwrap();
    assert_eq!(lifted.n_terminals(), 7);

    let out = run(tmp.path(), &["padic", "encode", "--tree", "example.json", "--outdir", "enc"]);
    assert!(stdout(&out).contains("x1,+p^1+p^2+p^5+p^7,2442"));
    let out = run(tmp.path(), &["padic", "decode", "enc/C.csv", "--outdir", "dec"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let back = Dendrogram::from_json(&fs::read_to_string(tmp.path().join("dec/dendrogram.json")).unwrap()).unwrap();
    assert_eq!(back, eight_terminal_example());

    let out = run(tmp.path(), &["padic", "-p", "1", "encode", "--tree", "example.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_verdicts_and_exit_codes() {
    let tmp = TempDir::new().unwrap();
    example_tree(tmp.path());
    let out = run(tmp.path(), &["check", "example.json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("verdict: PASS"), "{text}");
    assert!(text.contains("violating 0"), "{text}");
    assert!(text.contains("canonical form: yes"), "{text}");

    write(tmp.path(), "line.csv", "x\n0\n3\n4\n");
    let out = run(tmp.path(), &["check", "line.csv", "--points"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("verdict: FAIL"), "{text}");
    assert!(text.contains("witness: x1 x2 x3"), "{text}");

    write(tmp.path(), "asym.csv", "a,b\n0,1\n2,0\n");
    let out = run(tmp.path(), &["check", "asym.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outdir_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dendrowave"))
        .args(["generate", "--seed", "1"])
        .current_dir(tmp.path())
        .env("DENDROWAVE_OUTDIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from-env/tree.json").exists());
    assert!(tmp.path().join("from-env/data.csv").exists());
}

#[test]
fn commands_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        assert!(run(tmp.path(), &["generate", "--n", "12", "--m", "2", "--seed", "9", "--outdir", dir]).status.success());
        let tree = format!("{dir}/tree.json");
        let data = format!("{dir}/data.csv");
        assert!(run(tmp.path(), &["transform", "--tree", &tree, "--data", &data, "--outdir", dir]).status.success());
    }
    for name in ["tree.json", "data.csv", "C.csv", "D.csv", "smooth.csv", "manifest.json"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
