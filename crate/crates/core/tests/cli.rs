use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn llp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("LLP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|it| it.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn check_load_balancing_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("0.32298"), "{text}");
    let files = listing(dir.path());
    assert!(files.iter().any(|f| f.ends_with("-check.json")), "{files:?}");
    assert!(files.iter().any(|f| f.ends_with("manifest.json")), "{files:?}");
}

#[test]
fn check_server_allocation_witness_is_refuted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("sa_witness.json");
    let o = llp(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn simulate_with_zero_horizon_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "horizon=0", "--set", "x0=[3,4]"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = listing(dir.path()).into_iter().find(|f| f.ends_with(".csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join(csv)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[1].starts_with("0,3,4"), "{text}");
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let cfg = config("load_balancing.json");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_llp"))
            .args(["ensemble", "--config", cfg.to_str().unwrap(), "--set", "horizon=300", "--set", "n_trajectories=16"])
            .arg("--out")
            .arg(dir.path())
            .env("LLP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let name = listing(dir.path()).into_iter().find(|f| f.ends_with(".csv") && !f.contains("summar")).unwrap();
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn invalid_parameter_names_the_field_and_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(&["simulate", "--config", cfg.to_str().unwrap(), "--set", "world.model.p_r=1.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p_r"), "{}", stderr(&o));
    assert!(listing(dir.path()).is_empty(), "{:?}", listing(dir.path()));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(&["check", "--config", cfg.to_str().unwrap(), "--set", "horizn=5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizn"), "{}", stderr(&o));
}

#[test]
fn environment_overflow_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(
        &["simulate", "--config", cfg.to_str().unwrap(), "--set", "env_cap=10", "--set", "horizon=5000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(listing(dir.path()).is_empty(), "{:?}", listing(dir.path()));
}

#[test]
fn manifest_records_hash_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(
        &["ensemble", "--config", cfg.to_str().unwrap(), "--seed", "17", "--set", "horizon=50", "--set", "n_trajectories=3"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = listing(dir.path()).into_iter().find(|f| f.ends_with("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(manifest)).unwrap()).unwrap();
    assert_eq!(v["master_seed"], 17);
    assert_eq!(v["seeds"].as_array().unwrap().len(), 3);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn renewal_and_probe_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("coin_free.json");
    let o = llp(
        &["renewal", "--config", cfg.to_str().unwrap(), "--set", "horizon=20000", "--set", "renewal.margin=2000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let files = listing(dir.path());
    assert!(files.iter().any(|f| f.ends_with("-renewal.json")), "{files:?}");
    assert!(files.iter().any(|f| f.ends_with("-cycles.csv")), "{files:?}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(
        &["probe", "--config", cfg.to_str().unwrap(), "--set", "horizon=500", "--set", "n_trajectories=8"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(listing(dir.path()).iter().any(|f| f.ends_with("-probe.json")));
}

#[test]
fn curve_writes_one_row_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("load_balancing.json");
    let o = llp(
        &["curve", "--config", cfg.to_str().unwrap(), "--set", "horizon=200", "--set", "n_trajectories=4"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let name = listing(dir.path()).into_iter().find(|f| f.ends_with("-curve.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
}
