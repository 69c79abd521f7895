use std::collections::BTreeSet;

use llp::harness::{ExperimentConfig, Setting};
use serde_json::Value;

fn schema() -> Value {
    let text = include_str!("../schema/config.schema.json");
    serde_json::from_str(text).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn top_level_properties_match_config_fields() {
    let s = schema();
    let cfg = serde_json::to_value(Setting::I.config(10, 1, 0)).unwrap();
    assert_eq!(keys(&cfg), keys(&s["properties"]));
    assert_eq!(keys(&cfg["renewal"]), keys(&s["properties"]["renewal"]["properties"]));
    assert_eq!(keys(&cfg["probe"]), keys(&s["properties"]["probe"]["properties"]));
    assert_eq!(keys(&cfg["lyapunov"]), keys(&s["properties"]["lyapunov"]["properties"]));
}

#[test]
fn agent_and_model_variants_are_described() {
    let s = schema();
    let cfg = serde_json::to_value(Setting::I.config(10, 1, 0)).unwrap();
    let q = &s["$defs"]["agent"]["oneOf"][0]["properties"];
    assert_eq!(keys(&cfg["agent"]), keys(q));
    let lb = &s["$defs"]["model"]["oneOf"][0]["properties"];
    assert_eq!(keys(&cfg["world"]["model"]), keys(lb));
}

#[test]
fn minimal_config_needs_only_a_world() {
    let text = r#"{"world": {"model": {"kind": "server_allocation", "lambda": 1, "mu": 1.05, "mu_tilde": 22}}}"#;
    let cfg: ExperimentConfig = llp::io::parse_config_str(text, &[]).unwrap();
    assert_eq!(cfg.horizon, 10_000);
    assert_eq!(cfg.n_trajectories, 200);
}
