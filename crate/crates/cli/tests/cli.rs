use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"seed = 42

[model.observation]
rays = 16

[model.encoder]
scan_hidden = [16]
velocity_hidden = [4]
fusion_hidden = [16]
condition_dim = 8

[model.crnn]
embed_dim = 8
time_hidden = 8
hidden = 16

[model.diffusion]
steps = 8

[train]
epochs = 2
batch_size = 8
checkpoint_every = 1

[sim]
max_steps = 200
"#;

fn dtg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtg")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dtg(args);
    assert!(
        out.status.success(),
        "dtg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// world gen -> dataset build -> train -> eval -> sim -> report in `dir`.
fn pipeline(dir: &Path) -> Vec<PathBuf> {
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let worlds = dir.join("worlds");
    std::fs::create_dir_all(&worlds).unwrap();
    for seed in ["1", "2"] {
        let out = worlds.join(format!("w{seed}.dtgw"));
        ok(&[
            "world",
            "gen",
            "--seed",
            seed,
            "--size",
            "80",
            "--resolution",
            "0.5",
            "--preset",
            "corridor",
            "--out",
            s(&out),
        ]);
    }
    let train = dir.join("train.dtgd");
    let test = dir.join("test.dtgd");
    ok(&[
        "dataset",
        "build",
        "--worlds",
        s(&worlds),
        "--n",
        "6",
        "--mode",
        "train",
        "--out",
        s(&train),
        "--config",
        s(&cfg),
    ]);
    ok(&[
        "dataset",
        "build",
        "--worlds",
        s(&worlds),
        "--n",
        "3",
        "--mode",
        "test",
        "--out",
        s(&test),
        "--config",
        s(&cfg),
        "--seed",
        "7",
    ]);
    let ckpt = dir.join("model.dtgc");
    ok(&["train", "--dataset", s(&train), "--config", s(&cfg), "--out", s(&ckpt)]);
    let results = dir.join("results.csv");
    let text = ok(&[
        "eval",
        "--ckpt",
        s(&ckpt),
        "--scenarios",
        s(&test),
        "--out",
        s(&results),
    ]);
    assert!(text.contains("traversability_binary"), "{text}");
    let episodes = dir.join("episodes.csv");
    let trace = dir.join("trace");
    ok(&[
        "sim",
        "--ckpt",
        s(&ckpt),
        "--world",
        s(&worlds.join("w1.dtgw")),
        "--episodes",
        "2",
        "--out",
        s(&episodes),
        "--trace",
        s(&trace),
        "--config",
        s(&cfg),
    ]);
    ok(&["report", s(&results)]);
    ok(&["report", "--trace", s(&trace), "--world", s(&worlds.join("w1.dtgw"))]);
    vec![
        train,
        test,
        ckpt.clone(),
        PathBuf::from(format!("{}.e1", ckpt.display())),
        PathBuf::from(format!("{}.log.csv", ckpt.display())),
        results,
        episodes,
        trace.join("episode_000_poses.csv"),
        trace.join("episode_001_plans.csv"),
    ]
}

#[test]
fn pipeline_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = pipeline(a.path());
    let fb = pipeline(b.path());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    assert!(a.path().join("clearance_hist.svg").exists());
    assert!(a.path().join("ratio_signed_hist.svg").exists());
    assert!(a.path().join("trace/episode_000.svg").exists());

    let manifest = std::fs::read_to_string(format!("{}.manifest.json", fa[2].display())).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["command"], "train");
    let inputs = m["inputs"].as_object().unwrap();
    assert_eq!(inputs.len(), 1);
    assert_eq!(inputs.values().next().unwrap().as_str().unwrap().len(), 64);
    assert!(m["config"].as_str().unwrap().contains("hidden = 16"));
}

#[test]
fn corrupted_checkpoint_is_a_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let files = pipeline(dir.path());
    let mut bytes = std::fs::read(&files[2]).unwrap();
    bytes[0] ^= 0xff;
    let bad = dir.path().join("bad.dtgc");
    std::fs::write(&bad, bytes).unwrap();
    let out = dtg(&[
        "eval",
        "--ckpt",
        s(&bad),
        "--scenarios",
        s(&files[1]),
        "--out",
        s(&dir.path().join("r.csv")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("dtg: error[version-mismatch]: "), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn usage_errors_are_one_line() {
    let out = dtg(&["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("dtg: error[usage]: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    let out = dtg(&[
        "eval",
        "--ckpt",
        "/nonexistent.dtgc",
        "--scenarios",
        "/nonexistent.dtgd",
        "--out",
        "/tmp/x.csv",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("dtg: error[io]: "));
}

#[test]
fn config_defaults_round_trip() {
    let text = ok(&["config", "defaults"]);
    for key in [
        "[train]",
        "beta = 0.1",
        "[model.diffusion]",
        "steps = 32",
        "[sim]",
        "goal_radius_m = 2.0",
        "[eval]",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.toml");
    std::fs::write(&p, &text).unwrap();
    assert_eq!(
        dtg_core::config::DtgConfig::load(&p).unwrap(),
        dtg_core::config::DtgConfig::default()
    );
}

#[test]
fn help_lists_every_subcommand() {
    let text = ok(&["--help"]);
    for cmd in ["world", "dataset", "train", "eval", "sim", "report", "config"] {
        assert!(text.contains(cmd));
    }
}
