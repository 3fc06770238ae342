use std::path::Path;
use std::process::{Command, Output};

fn ordlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordlab"))
        .args(args)
        .env_remove("ORDLAB_WORKERS")
        .output()
        .unwrap()
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const BLOBS: &str = "dataset.kind = blobs
dataset.synthetic_per_class = 12
dataset.synthetic_test_per_class = 6
model.arch = mlp
model.hidden = 6
optim.batch_size = 4
optim.epochs = 2
";

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").display().to_string();

    let cfg = config(dir.path(), "optim.lerning_rate = 0.1\n");
    let r = ordlab(&["train", "--config", &cfg, "--out", &out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("optim.lerning_rate"));

    assert_eq!(ordlab(&["bogus", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(ordlab(&["--help"]).status.code(), Some(0));

    let cfg = config(dir.path(), &format!("{BLOBS}dataset.kind = mnist\n"));
    let r = ordlab(&["train", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(1), "{}", String::from_utf8_lossy(&r.stderr));

    let cfg = config(
        dir.path(),
        &BLOBS.replace("synthetic_per_class = 12", "synthetic_per_class = 40"),
    );
    let r = ordlab(&["explore", "--config", &cfg, "--out", &out]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("budget"));

    let cfg = config(dir.path(), "plot.input = missing.csv\n");
    assert_eq!(
        ordlab(&["plot", "--config", &cfg, "--out", &out]).status.code(),
        Some(1)
    );
    let cfg = config(dir.path(), "");
    assert_eq!(
        ordlab(&["plot", "--config", &cfg, "--out", &out]).status.code(),
        Some(2)
    );
}

#[test]
fn seed_flag_and_worker_env_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BLOBS);
    let run = |seed: &str, name: &str, workers: Option<&str>| {
        let out = dir.path().join(name);
        let mut c = Command::new(env!("CARGO_BIN_EXE_ordlab"));
        c.args([
            "poa",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        match workers {
            Some(w) => c.env("ORDLAB_WORKERS", w),
            None => c.env_remove("ORDLAB_WORKERS"),
        };
        let r = c.output().unwrap();
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        ordlab::experiment::without_wall_seconds(&std::fs::read_to_string(out.join("metrics.csv")).unwrap())
    };
    let a = run("5", "a", None);
    assert_eq!(a, run("5", "b", Some("3")));
    assert_ne!(a, run("6", "c", None));
    let echoed = std::fs::read_to_string(dir.path().join("a/config.resolved.txt")).unwrap();
    assert!(echoed.contains("run.seed = 5"));

    let r = Command::new(env!("CARGO_BIN_EXE_ordlab"))
        .args([
            "train",
            "--config",
            &cfg,
            "--out",
            dir.path().join("d").to_str().unwrap(),
        ])
        .env("ORDLAB_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
}
