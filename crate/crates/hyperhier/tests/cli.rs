use std::fs;
use std::process::{Command, Output};

fn hyperhier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperhier"))
        .args(args)
        .env_remove("HYPERHIER_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_documents_every_flag() {
    let o = hyperhier(&["run", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for flag in ["--config", "--out", "--geometry", "--seed", "--steps", "--tree", "--shuffle-tree", "--set"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    for key in ["lr_offsets", "boundary_epsilon", "cwece_norm", "ignore_label", "pair_cap"] {
        assert!(text.contains(key), "{key} missing from help");
    }
    let o = hyperhier(&["--help"]);
    for cmd in ["gen", "train", "eval", "analyze", "concavity", "run"] {
        assert!(stdout(&o).contains(cmd));
    }
}

#[test]
fn usage_errors_have_their_own_exit_code() {
    let o = hyperhier(&["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert_eq!(hyperhier(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hyperhier(&[]).status.code(), Some(2));
}

#[test]
fn concavity_table_matches_closed_form() {
    let o = hyperhier(&["concavity", "--norms", "0,0", "--grid", "0.5,1.0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][1] - 1.5f64.acosh()).abs() < 1e-11);
    assert!((rows[1][1] - 3f64.acosh()).abs() < 1e-11);
    assert!((rows[0][2] - 4.0 / 5f64.sqrt()).abs() < 1e-11);
    assert!((rows[1][2] - 2f64.sqrt()).abs() < 1e-11);
    assert!(rows.iter().all(|r| ((r[2] - r[3]) / r[2]).abs() < 1e-5));
    assert_eq!(hyperhier(&["concavity", "--norms", "1.0,0", "--grid", "0.5"]).status.code(), Some(7));
    assert_eq!(hyperhier(&["concavity", "--norms", "0,0,0", "--grid", "0.5"]).status.code(), Some(3));
}

#[test]
fn stages_chain_through_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = ["--out", out, "--steps", "200", "--set", "samples_per_class=40"];
    for cmd in ["gen", "train", "eval", "analyze"] {
        let mut args = vec![cmd];
        args.extend_from_slice(&common);
        let o = hyperhier(&args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{cmd} wrote to stdout");
    }
    for f in ["train.hheb", "test.hheb", "tree.txt", "model.ckpt", "metrics_child.json", "metrics_parent.json", "analysis.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn output_directory_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let cli_dir = tempfile::tempdir().unwrap();
    let file_dir = tempfile::tempdir().unwrap();
    let cfg = file_dir.path().join("run.cfg");
    fs::write(&cfg, format!("out_dir = {}\nsamples_per_class = 5\n", file_dir.path().display())).unwrap();
    let gen = |extra: &[&str], env: Option<&std::path::Path>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hyperhier"));
        c.arg("gen").arg("--config").arg(&cfg).args(extra).env_remove("HYPERHIER_OUT").stderr(std::process::Stdio::null());
        if let Some(e) = env {
            c.env("HYPERHIER_OUT", e);
        }
        assert!(c.status().unwrap().success());
    };
    gen(&[], None);
    assert!(file_dir.path().join("tree.txt").is_file());
    gen(&[], Some(env_dir.path()));
    assert!(env_dir.path().join("tree.txt").is_file());
    gen(&["--out", cli_dir.path().to_str().unwrap()], Some(env_dir.path()));
    assert!(cli_dir.path().join("tree.txt").is_file());
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // missing inputs
    assert_eq!(hyperhier(&["eval", "--out", out]).status.code(), Some(4));
    // bad configuration values
    assert_eq!(hyperhier(&["gen", "--out", out, "--set", "sigma=-1"]).status.code(), Some(3));
    assert_eq!(hyperhier(&["gen", "--out", out, "--set", "nonsense=1"]).status.code(), Some(3));
    assert_eq!(hyperhier(&["gen", "--out", out, "--geometry", "spherical"]).status.code(), Some(3));
    // malformed and invalid tree files
    let tree = dir.path().join("bad.txt");
    fs::write(&tree, "levels: 2\nlevel 0: a, b\n").unwrap();
    assert_eq!(hyperhier(&["gen", "--out", out, "--tree", tree.to_str().unwrap()]).status.code(), Some(5));
    fs::write(&tree, "levels: 2\nlevel 0: a, b, c\nlevel 1: x, y\nparents 0: 0 0 0\n").unwrap();
    assert_eq!(hyperhier(&["gen", "--out", out, "--tree", tree.to_str().unwrap()]).status.code(), Some(6));
    // corrupted embedding dump
    assert!(hyperhier(&["gen", "--out", out, "--set", "samples_per_class=5"]).status.success());
    fs::write(dir.path().join("train.hheb"), b"HHEX").unwrap();
    assert_eq!(hyperhier(&["train", "--out", out]).status.code(), Some(5));
}

#[test]
fn custom_tree_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.in");
    fs::write(&tree, "# two groups\nlevels: 2\nlevel 0: a, b, c, d\nlevel 1: left, right\nparents 0: 0 1 0 1\n").unwrap();
    let out = dir.path().join("out");
    let o = hyperhier(&[
        "run",
        "--out",
        out.to_str().unwrap(),
        "--tree",
        tree.to_str().unwrap(),
        "--steps",
        "200",
        "--set",
        "samples_per_class=30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics_parent.json")).unwrap()).unwrap();
    assert_eq!(v["classes"], serde_json::json!(["left", "right"]));
}
