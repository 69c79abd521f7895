//! Config loading, CSV/JSON outputs, manifests and staged writes.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::harness::{CostCurve, EnsembleResult, ExperimentConfig};
use crate::llp::Trajectory;
use crate::model::{Action, QueueState};
use crate::renewal::CycleStats;

fn config_error(path: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Sets `dotted.key` inside `root` to `raw`, parsed as JSON when possible
/// and as a string otherwise. Missing intermediate objects are created.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(config_error(assignment, "empty override key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_error(parts[..i].join("."), "cannot descend into a non-object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

/// Strict typed parse: unknown keys, type mismatches and missing fields are
/// reported with their key path; range errors name the offending field.
pub fn parse_config(value: Value) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_error(if path == "." { String::from("<root>") } else { path }, e.into_inner().to_string())
    })?;
    cfg.validate().map_err(|e| match e {
        LabError::Parameter { field, reason } => config_error(field, reason),
        other => other,
    })?;
    Ok(cfg)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| config_error("<root>", e.to_string()))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    parse_config(value)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
    parse_config_str(&text, overrides)
}

/// SHA-256 of the canonical JSON of the effective config, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configs always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub experiment: String,
    pub config_hash: String,
    pub master_seed: u64,
    /// Seeds of the trajectories actually run, in index order.
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    pub crate_version: String,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(subcommand: &str, cfg: &ExperimentConfig, seeds: Vec<u64>) -> Self {
        Manifest {
            subcommand: subcommand.to_string(),
            experiment: cfg.name.clone(),
            config_hash: config_hash(cfg),
            master_seed: cfg.master_seed,
            seeds,
            files: Vec::new(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
        }
    }
}

/// `<experiment>-<seed>` with path separators replaced.
pub fn output_stem(experiment: &str, seed: u64) -> String {
    let clean: String = experiment
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{clean}-{seed}")
}

/// Output files are written into a hidden staging directory next to the
/// destination and moved into place only by [`Stage::commit`]. Dropping an
/// uncommitted stage deletes everything written so far.
pub struct Stage {
    dest: PathBuf,
    dir: tempfile::TempDir,
    files: Vec<String>,
}

impl Stage {
    pub fn new(dest: &Path) -> Result<Self> {
        fs::create_dir_all(dest)?;
        let dir = tempfile::Builder::new().prefix(".llp-stage-").tempdir_in(dest)?;
        Ok(Stage {
            dest: dest.to_path_buf(),
            dir,
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn track(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut f = fs::File::create(self.path(name))?;
        f.write_all(bytes)?;
        f.sync_all()?;
        self.track(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Creates a staged file to be written by the caller.
    pub fn create(&mut self, name: &str) -> Result<fs::File> {
        let f = fs::File::create(self.path(name))?;
        self.track(name);
        Ok(f)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes the manifest last and renames every staged file into place.
    pub fn commit(mut self, mut manifest: Manifest, manifest_name: &str) -> Result<Vec<PathBuf>> {
        manifest.files = self.files.clone();
        self.write_json(manifest_name, &manifest)?;
        let mut out = Vec::new();
        for name in &self.files {
            let target = self.dest.join(name);
            fs::rename(self.dir.path().join(name), &target)?;
            out.push(target);
        }
        Ok(out)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    n: u64,
    x1: i64,
    x2: i64,
    action: Option<char>,
    cost: Option<f64>,
    first_visit: Option<u8>,
}

/// One row per time `n = 0..=H`: the state, then the action, cost and
/// first-visit flag of the step leaving it (empty on the last row).
pub fn write_trajectory_csv<W: Write>(w: W, t: &Trajectory) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for s in &t.steps {
        wr.serialize(TrajectoryRow {
            n: s.n,
            x1: s.state.x1,
            x2: s.state.x2,
            action: Some(s.action.letter()),
            cost: Some(s.cost),
            first_visit: Some(s.first_visit as u8),
        })?;
    }
    let last = t.final_state();
    wr.serialize(TrajectoryRow {
        n: t.horizon() as u64,
        x1: last.x1,
        x2: last.x2,
        action: None,
        cost: None,
        first_visit: None,
    })?;
    wr.flush()?;
    Ok(())
}

/// States and actions read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredPath {
    pub states: Vec<QueueState>,
    pub actions: Vec<Action>,
    pub costs: Vec<f64>,
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<StoredPath> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = StoredPath {
        states: Vec::new(),
        actions: Vec::new(),
        costs: Vec::new(),
    };
    let mut done = false;
    for (i, row) in rd.deserialize::<TrajectoryRow>().enumerate() {
        let row = row?;
        if done {
            return Err(LabError::domain(format!("row {i} follows the terminal row")));
        }
        if row.n != i as u64 {
            return Err(LabError::domain(format!("row {i} has time index {}", row.n)));
        }
        out.states.push(QueueState::new(row.x1, row.x2));
        match (row.action, row.cost) {
            (Some(a), Some(c)) => {
                let a = Action::from_letter(&a.to_string())
                    .ok_or_else(|| LabError::domain(format!("row {i}: unknown action {a:?}")))?;
                out.actions.push(a);
                out.costs.push(c);
            }
            (None, None) => done = true,
            _ => return Err(LabError::domain(format!("row {i}: action and cost must be both set or both empty"))),
        }
    }
    if !done {
        return Err(LabError::domain("trajectory CSV lacks its terminal row"));
    }
    Ok(out)
}

pub fn read_trajectory_file(path: &Path) -> Result<StoredPath> {
    read_trajectory_csv(fs::File::open(path)?)
}

pub fn write_ensemble_csv<W: Write>(w: W, r: &EnsembleResult) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "mean_l1", "se_l1"])?;
    for (n, (m, s)) in r.mean_l1.iter().zip(&r.se_l1).enumerate() {
        wr.write_record([n.to_string(), m.to_string(), s.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_summaries_csv<W: Write>(w: W, r: &EnsembleResult) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["index", "seed", "final_x1", "final_x2", "alpha", "success_time", "escaped"])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for s in r.summaries.iter().flatten() {
        wr.write_record([
            s.index.to_string(),
            s.seed.to_string(),
            s.final_state.x1.to_string(),
            s.final_state.x2.to_string(),
            opt(s.alpha.map(|a| a.to_string())),
            opt(s.success_time.map(|t| t.to_string())),
            opt(s.escaped.map(|e| (e as u8).to_string())),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(w: W, c: &CostCurve) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["gamma", "mean", "se", "green_mean", "green_se", "truncation_bound"])?;
    for k in 0..c.gamma_grid.len() {
        wr.write_record([
            c.gamma_grid[k].to_string(),
            c.mean[k].to_string(),
            c.se[k].to_string(),
            c.green_mean[k].to_string(),
            c.green_se[k].to_string(),
            c.truncation_bound[k].to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_cycles_csv<W: Write>(w: W, c: &CycleStats) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["cycle", "gap", "scope", "dx1", "dx2"])?;
    for k in 0..c.gaps.len() {
        wr.write_record([
            k.to_string(),
            c.gaps[k].to_string(),
            c.scopes[k].to_string(),
            c.displacements[k].x1.to_string(),
            c.displacements[k].x2.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Setting;
    use serde_json::json;

    const MINIMAL: &str = r#"{"world": {"model": {"kind": "load_balancing", "lambda": 1.5, "mu1": 0.1,
        "mu2": 0.35, "p_r": 0.45, "p_g": 0.8, "mu_tilde": 10.8}}}"#;

    #[test]
    fn overrides() {
        let mut v = json!({"a": {"b": 1}});
        apply_override(&mut v, "a.b=2").unwrap();
        apply_override(&mut v, "a.c.d=[1,2]").unwrap();
        apply_override(&mut v, "name=run one").unwrap();
        assert_eq!(v, json!({"a": {"b": 2, "c": {"d": [1, 2]}}, "name": "run one"}));
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "name.x=1").is_err());
    }

    #[test]
    fn config_errors_name_the_key() {
        let err = parse_config_str(MINIMAL, &["world.model.p_r=1.5".into()]).unwrap_err();
        assert!(matches!(&err, LabError::Config { path, .. } if path == "p_r"), "{err}");
        let err = parse_config_str(MINIMAL, &["horizn=5".into()]).unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
        let err = parse_config_str(MINIMAL, &["horizon=\"many\"".into()]).unwrap_err();
        assert!(matches!(&err, LabError::Config { path, .. } if path == "horizon"), "{err}");
        let err = parse_config_str(r#"{"horizon": 5}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("world"), "{err}");
    }

    #[test]
    fn hash_tracks_effective_fields() {
        let a = parse_config_str(MINIMAL, &[]).unwrap();
        let b = parse_config_str(MINIMAL, &["horizon=10000".into()]).unwrap();
        let c = parse_config_str(MINIMAL, &["horizon=10001".into()]).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let t = Setting::I.config(50, 1, 3).trajectory(0).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,x1,x2,action,cost,first_visit\n0,0,0,"));
        assert_eq!(text.lines().count(), 52);
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.states, t.state_path());
        assert_eq!(back.actions, t.actions());

        let empty = Setting::I.config(0, 1, 3).trajectory(0).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &empty).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,x1,x2,action,cost,first_visit\n0,0,0,,,\n");
    }

    #[test]
    fn staged_outputs_vanish_without_commit() {
        let root = tempfile::tempdir().unwrap();
        {
            let mut s = Stage::new(root.path()).unwrap();
            s.write_bytes("a.txt", b"x").unwrap();
        }
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);

        let cfg = parse_config_str(MINIMAL, &[]).unwrap();
        let mut s = Stage::new(root.path()).unwrap();
        s.write_bytes("a.txt", b"x").unwrap();
        let files = s.commit(Manifest::new("simulate", &cfg, vec![1]), "m.json").unwrap();
        assert_eq!(files.len(), 2);
        let names: Vec<String> = fs::read_dir(root.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names.len(), 2);
    }
}
