use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qgep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn poisson_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "p.cfg", "experiment = poisson\ntrials = 2\nseed = 11\nmax_iters = 30\n");
    let mut summaries = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = qgep(&["run", &cfg, "--set", &format!("output_dir={}", out.display())]);
        assert!(o.status.success(), "{}", stderr(&o));
        summaries.push((
            fs::read(out.join("summary.csv")).unwrap(),
            fs::read(out.join("trial_1.csv")).unwrap(),
        ));
        for f in ["config.echo", "timing.csv", "bands.csv", "solution_0.csv", "trial_0.csv"] {
            assert!(out.join(f).is_file(), "missing {f}");
        }
    }
    assert_eq!(summaries[0], summaries[1]);

    let summary = String::from_utf8(summaries[0].0.clone()).unwrap();
    assert_eq!(column(&summary, "status"), vec!["ok", "ok"]);
    let target: f64 = column(&summary, "classical_objective")[0].parse().unwrap();
    for v in column(&summary, "final_objective") {
        let v: f64 = v.parse().unwrap();
        assert!(v <= target * (1.0 + 1e-12) && v > 0.0);
    }
    assert!(!column(&summary, "residual")[0].is_empty());
}

#[test]
fn sampled_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.cfg",
        "experiment = poisson\npoisson.nodes = 8\ntrials = 2\nshots = 500\nmax_iters = 3\nlayers = 1\n",
    );
    let mut files = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "3")] {
        let out = tmp.path().join(run);
        let o = qgep(&[
            "run",
            &cfg,
            "--set",
            &format!("output_dir={}", out.display()),
            "--set",
            &format!("workers={workers}"),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push((fs::read(out.join("summary.csv")).unwrap(), fs::read(out.join("trial_0.csv")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn beam_classical_eigenvalue() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "beam.cfg", "experiment = beam\ntrials = 1\nmax_iters = 1\n");
    let o = qgep(&["solve-classical", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let field = |k: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(field("dim"), 128.0);
    assert!((field("target") / 2.55e7 - 1.0).abs() < 0.02);
    assert!((field("frequency_hz") / 804.0 - 1.0).abs() < 0.02);

    let out = tmp.path().join("run");
    let o = qgep(&["run", &cfg, "--set", &format!("output_dir={}", out.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lambda: f64 = column(&summary, "classical_objective")[0].parse().unwrap();
    assert!((lambda / 2.55e7 - 1.0).abs() < 0.02);
}

#[test]
fn exported_pencil_round_trips() {
    let tmp = TempDir::new().unwrap();
    let beam = write_config(tmp.path(), "beam.cfg", "experiment = beam\n");
    let first = tmp.path().join("first");
    let o = qgep(&["export-pencil", &beam, "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let custom = write_config(
        tmp.path(),
        "custom.cfg",
        "experiment = custom-gep\npencil.a = first/A.txt\npencil.b = first/B.txt\n",
    );
    let second = tmp.path().join("second");
    let o = qgep(&["export-pencil", &custom, "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["A.txt", "B.txt"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }

    let o = qgep(&["solve-classical", &custom]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("dim = 128"));
}

#[test]
fn malformed_pencil_header_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("A.txt"), "# comment\nfour 0\n1,0 2,0 3,0 4,0\n").unwrap();
    fs::write(tmp.path().join("B.txt"), "4 0\n1,0 1,0 1,0 1,0\n").unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = custom-gep\npencil.a = A.txt\npencil.b = B.txt\n");
    let o = qgep(&["solve-classical", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn indefinite_b_is_rejected() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("A.txt"), "4 0\n1,0 2,0 3,0 4,0\n").unwrap();
    fs::write(tmp.path().join("B.txt"), "4 0 1\n1,0 1,0 -2,0 1,0\n0.1,0 0,0 0,0 0,0\n").unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = custom-gep\npencil.a = A.txt\npencil.b = B.txt\n");
    let o = qgep(&["run", &cfg, "--set", &format!("output_dir={}", tmp.path().join("o").display())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("positive definite"), "{}", stderr(&o));
}

#[test]
fn config_errors_point_at_the_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", "experiment = poisson\n\ntrials = many\n");
    let o = qgep(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config line 3, key `trials`"), "{}", stderr(&o));

    let o = qgep(&["run", &cfg, "--set", "trials=1", "--set", "eps_tol=0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps_tol"));
}

#[test]
fn bias_study_writes_its_table() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("A.txt"), "4 0 1\n1,0 -0.5,0 0.8,0 -0.2,0\n0.3,0 0.4,0 -0.3,0 0,0\n").unwrap();
    fs::write(tmp.path().join("B.txt"), "4 0 1\n1.5,0 1,0 1.2,0 0.9,0\n0.2,0 0.1,0 0.2,0 0,0\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "bias.cfg",
        "experiment = bias-study\npencil.a = A.txt\npencil.b = B.txt\nlayers = 1\nbias.gate = 3\nbias.shots = 100,1000\nbias.repeats = 50\noutput_dir = out\n",
    );
    let o = qgep(&["run", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(tmp.path().join("out/bias.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("shots,mean,std,exact,bias,std_error,repeats"));
    assert_eq!(column(&table, "shots"), vec!["100", "1000"]);
    assert_eq!(column(&table, "repeats"), vec!["50", "50"]);
}
