//! Command-line front end.
//!
//! Exit codes: 0 success (for `check`, all conditions hold), 1 error,
//! 2 conditions refuted, 3 environment table overflow.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::conditions::{lemma_lb_check, lemma_sa_check, model1_check, ConditionReport, LabeledCheck, LemmaReport};
use crate::error::{LabError, Result};
use crate::harness::{cost_curve, lyapunov_probe, probe_ensemble, run_ensemble, ExperimentConfig, LyapunovReport, ProbeReport};
use crate::io::{self, Manifest, Stage};
use crate::model::ModelSpec;
use crate::renewal::{self, CycleStats, DriftEstimate, RecordTimes};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "llp", version, about = "Local learning processes on two-queue networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify or refute the drift conditions of the configured model.
    Check(Common),
    /// Simulate one trajectory and write it as CSV.
    Simulate(Common),
    /// Run an ensemble and write the mean |X_n| series.
    Ensemble(Common),
    /// Estimate discounted costs over the configured gamma grid.
    Curve(Common),
    /// Record times, cycles and drift of a stored or simulated trajectory.
    Renewal(Common),
    /// Transience probe over an ensemble plus the green Lyapunov check.
    Probe(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dotted `key=value` override applied before parsing; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Check(c) => ("check", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Ensemble(c) => ("ensemble", c),
            Command::Curve(c) => ("curve", c),
            Command::Renewal(c) => ("renewal", c),
            Command::Probe(c) => ("probe", c),
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Overflow { .. } => EXIT_OVERFLOW,
        _ => EXIT_ERROR,
    }
}

/// What a successful run prints and returns.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub files: Vec<PathBuf>,
}

pub fn run_cli(cli: &Cli) -> Result<Outcome> {
    let (name, common) = cli.command.parts();
    let mut cfg = io::load_config(&common.config, &common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    match &cli.command {
        Command::Check(_) => check(&cfg, common),
        Command::Simulate(_) => simulate(&cfg, common),
        Command::Ensemble(_) => ensemble(&cfg, common),
        Command::Curve(_) => curve(&cfg, common),
        Command::Renewal(_) => renewal_cmd(&cfg, common),
        Command::Probe(_) => probe(&cfg, common),
    }
    .map(|mut o| {
        let _ = writeln!(o.text, "{name}: wrote {} file(s) to {}", o.files.len(), common.out.display());
        o
    })
}

fn stem(cfg: &ExperimentConfig) -> String {
    io::output_stem(&cfg.name, cfg.master_seed)
}

#[derive(Debug, Serialize)]
pub struct CheckOutput {
    pub report: ConditionReport,
    pub lemma: Option<LemmaReport>,
    pub verdict: bool,
}

pub fn check_model(model: &ModelSpec, cfg: &ExperimentConfig) -> Result<CheckOutput> {
    let report = model1_check(model, cfg.direction)?;
    let lemma = match model {
        ModelSpec::LoadBalancing(p) => Some(lemma_lb_check(p)?),
        ModelSpec::ServerAllocation(p) => Some(lemma_sa_check(p)?),
        ModelSpec::Custom(_) => None,
    };
    let verdict = report.all_hold();
    Ok(CheckOutput { report, lemma, verdict })
}

fn fmt_check(text: &mut String, c: &LabeledCheck) {
    let mark = if c.holds { "ok  " } else { "FAIL" };
    let _ = writeln!(text, "  [{mark}] {:<44} lhs={:<12.6} rhs={:<12.6} margin={:.6}", c.label, c.lhs, c.rhs, c.margin);
}

pub fn render_check(out: &CheckOutput) -> String {
    let r = &out.report;
    let mut t = String::new();
    let _ = writeln!(t, "drifts: red {}  green {}  green x-edge {}  green y-edge {}", r.drift_red, r.drift_green, r.drift_green_x_edge, r.drift_green_y_edge);
    let yn = |b: bool| if b { "holds" } else { "REFUTED" };
    match r.green_vector {
        Some(v) => _ = writeln!(t, "green stability vector: {} ({v})", yn(r.green_stable)),
        None => _ = writeln!(t, "green stability vector: {}", yn(r.green_stable)),
    }
    match r.direction {
        Some(d) => _ = writeln!(t, "common direction: {} (l = {}, rho = {:.6})", yn(r.common_direction), d.l, d.rho),
        None => _ = writeln!(t, "common direction: {}", yn(r.common_direction)),
    }
    if let Some(q) = r.quadrant {
        let _ = writeln!(t, "quadrant interval: [{:.6}, {:.6}]", q.alpha0, q.alpha1);
    }
    let _ = writeln!(t, "window condition 1 - alpha1 < rho - alpha0: {}", yn(r.window_condition));
    for c in &r.checks {
        fmt_check(&mut t, c);
    }
    match r.q_window {
        Some(w) => _ = writeln!(t, "q_window: ({:.6}, {:.6})", w.q0, w.q1),
        None => _ = writeln!(t, "q_window: none"),
    }
    if let Some(l) = &out.lemma {
        let _ = writeln!(t, "closed-form parameter inequalities: {}", if l.all_pass { "all pass" } else { "some fail" });
        for c in &l.checks {
            fmt_check(&mut t, c);
        }
        if let Some(d) = l.direct_window_condition {
            let _ = writeln!(t, "direct window condition: {}", yn(d));
        }
    }
    let _ = writeln!(t, "verdict: {}", if out.verdict { "all conditions hold" } else { "refuted" });
    t
}

fn check(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let out = check_model(&cfg.world.model, cfg)?;
    let text = render_check(&out);
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    stage.write_json(&format!("{base}-check.json"), &out)?;
    let files = stage.commit(Manifest::new("check", cfg, vec![]), &format!("{base}-check-manifest.json"))?;
    Ok(Outcome {
        code: if out.verdict { EXIT_OK } else { EXIT_REFUTED },
        text,
        files,
    })
}

fn simulate(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let t = cfg.trajectory(0)?;
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    let csv = format!("{base}.csv");
    io::write_trajectory_csv(stage.create(&csv)?, &t)?;
    let text = format!("simulated {} steps from {} to {} (seed {})\n", t.horizon(), t.x0, t.final_state(), t.seed);
    let files = stage.commit(Manifest::new("simulate", cfg, vec![t.seed]), &format!("{base}-manifest.json"))?;
    Ok(Outcome { code: EXIT_OK, text, files })
}

fn all_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.n_trajectories).map(|i| cfg.seed_of(i)).collect()
}

fn ensemble(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let r = run_ensemble(cfg)?;
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    io::write_ensemble_csv(stage.create(&format!("{base}.csv"))?, &r)?;
    if r.summaries.is_some() {
        io::write_summaries_csv(stage.create(&format!("{base}-summaries.csv"))?, &r)?;
    }
    let h = cfg.horizon;
    let text = format!(
        "{} trajectories, horizon {h}: mean |X_H| = {:.3} (se {:.3})\n",
        r.n_trajectories, r.mean_l1[h], r.se_l1[h]
    );
    let files = stage.commit(Manifest::new("ensemble", cfg, all_seeds(cfg)), &format!("{base}-manifest.json"))?;
    Ok(Outcome { code: EXIT_OK, text, files })
}

fn curve(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let c = cost_curve(cfg, &cfg.gamma_grid)?;
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    let path = format!("{base}-curve.csv");
    io::write_curve_csv(stage.create(&path)?, &c)?;
    let mut text = String::from("gamma      J_gamma (se)            green J_gamma (se)\n");
    for k in 0..c.gamma_grid.len() {
        let _ = writeln!(
            text,
            "{:<10} {:>10.4} ({:.4})  {:>10.4} ({:.4})",
            c.gamma_grid[k], c.mean[k], c.se[k], c.green_mean[k], c.green_se[k]
        );
    }
    let files = stage.commit(Manifest::new("curve", cfg, all_seeds(cfg)), &format!("{base}-curve-manifest.json"))?;
    Ok(Outcome { code: EXIT_OK, text, files })
}

#[derive(Debug, Serialize)]
pub struct RenewalReport {
    pub source: String,
    pub horizon: usize,
    pub direction: crate::model::Vec2,
    pub margin: usize,
    pub records: RecordTimes,
    pub alpha: Option<(f64, f64)>,
    pub drift: Option<DriftEstimate>,
    pub success_time: Option<usize>,
    pub cycles: Option<CycleStats>,
    pub displacement_lag1: Option<[Option<f64>; 2]>,
}

pub fn renewal_report(
    states: &[crate::model::QueueState],
    actions: &[crate::model::Action],
    cfg: &ExperimentConfig,
    source: String,
) -> Result<RenewalReport> {
    let horizon = states.len().saturating_sub(1);
    let l = cfg.renewal.direction();
    let margin = cfg.renewal.margin(horizon);
    let path = renewal::project(states, l)?;
    let records = renewal::record_times(&path, margin);
    let cycles = match renewal::cycle_stats(states, &records) {
        Ok(c) => Some(c),
        Err(LabError::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    let displacement_lag1 = cycles.as_ref().map(|c| {
        let xs: Vec<f64> = c.displacements.iter().map(|d| d.x1).collect();
        let ys: Vec<f64> = c.displacements.iter().map(|d| d.x2).collect();
        [renewal::lag1_autocorrelation(&xs), renewal::lag1_autocorrelation(&ys)]
    });
    Ok(RenewalReport {
        source,
        horizon,
        direction: l,
        margin,
        alpha: renewal::estimate_alpha(actions).ok(),
        drift: if horizon > 0 { Some(renewal::estimate_drift(states, Some(&records))?) } else { None },
        success_time: renewal::success_time(states, &cfg.renewal.cone(), margin)?,
        records,
        cycles,
        displacement_lag1,
    })
}

fn renewal_cmd(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let (states, actions, source, seeds) = match &cfg.renewal.input {
        Some(p) => {
            let stored = io::read_trajectory_file(p)?;
            (stored.states, stored.actions, p.display().to_string(), vec![])
        }
        None => {
            let t = cfg.trajectory(0)?;
            let seed = t.seed;
            (t.state_path(), t.actions(), format!("simulated (seed {seed})"), vec![seed])
        }
    };
    let report = renewal_report(&states, &actions, cfg, source)?;
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    stage.write_json(&format!("{base}-renewal.json"), &report)?;
    if let Some(c) = &report.cycles {
        let path = format!("{base}-cycles.csv");
        io::write_cycles_csv(stage.create(&path)?, c)?;
    }
    let mut text = format!(
        "{} certified record times (margin {}), {} cycles\n",
        report.records.certified.len(),
        report.margin,
        report.cycles.as_ref().map_or(0, |c| c.gaps.len())
    );
    if let Some(d) = &report.drift {
        let _ = writeln!(text, "drift estimate {}", d.point);
    }
    let files = stage.commit(Manifest::new("renewal", cfg, seeds), &format!("{base}-renewal-manifest.json"))?;
    Ok(Outcome { code: EXIT_OK, text, files })
}

#[derive(Debug, Serialize)]
pub struct ProbeOutput {
    pub transience: ProbeReport,
    pub lyapunov: LyapunovReport,
}

fn probe(cfg: &ExperimentConfig, common: &Common) -> Result<Outcome> {
    let transience = probe_ensemble(cfg)?;
    let lyapunov = lyapunov_probe(&cfg.world.model, cfg.lyapunov.v, cfg.lyapunov.grid_max)?;
    let text = format!(
        "escape fraction {:.4} (se {:.4}), |X_H| < H/4 in {:.4}; green Lyapunov check {}\n",
        transience.escape_fraction,
        transience.escape_se,
        transience.slow_fraction,
        if lyapunov.feasible { "feasible" } else { "infeasible" }
    );
    let mut stage = Stage::new(&common.out)?;
    let base = stem(cfg);
    stage.write_json(&format!("{base}-probe.json"), &ProbeOutput { transience, lyapunov })?;
    let files = stage.commit(Manifest::new("probe", cfg, all_seeds(cfg)), &format!("{base}-probe-manifest.json"))?;
    Ok(Outcome { code: EXIT_OK, text, files })
}
