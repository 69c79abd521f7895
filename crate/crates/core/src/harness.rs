//! Seeded Monte Carlo ensembles.
//!
//! Trajectory `i` of an ensemble always uses seed `derive_seed(master_seed, i)`,
//! and per-trajectory results are gathered in index order. Series of `|X_n|`
//! are aggregated with exact integer sums, so results do not depend on the
//! number of worker threads (`LLP_THREADS`) or on scheduling.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::DirectionStrategy;
use crate::error::{LabError, Result};
use crate::llp::{
    derive_seed, run_trajectory_with, transition_cost, AgentSpec, CostKind, RunOptions, StepSize,
    Trajectory, World, DEFAULT_ENV_CAP,
};
use crate::model::{Action, LoadBalancingParams, ModelSpec, QueueState, Region, Vec2};
use crate::renewal::{self, ConeSpec};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LLP_THREADS";

/// Number of batches for batch-means standard errors.
pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1Norm,
    FinalState,
    Alpha,
    SuccessTime,
    Escape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RenewalSettings {
    /// Projection direction; `e1` when absent.
    #[serde(default)]
    pub direction: Option<Vec2>,
    /// Censoring margin; `horizon / 10` when absent.
    #[serde(default)]
    pub margin: Option<usize>,
    /// Cone used for success times; the normalized diagonal when absent.
    #[serde(default)]
    pub cone: Option<ConeSpec>,
    /// Stored trajectory CSV analysed by the `renewal` subcommand.
    #[serde(default)]
    pub input: Option<PathBuf>,
}

impl RenewalSettings {
    pub fn direction(&self) -> Vec2 {
        self.direction.unwrap_or(Vec2::new(1.0, 0.0))
    }

    pub fn margin(&self, horizon: usize) -> usize {
        self.margin.unwrap_or_else(|| renewal::default_margin(horizon))
    }

    pub fn cone(&self) -> ConeSpec {
        self.cone.unwrap_or(ConeSpec {
            l: Vec2::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            restrict_quadrant: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    pub radius: i64,
    pub burn_in: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings { radius: 0, burn_in: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSettings {
    pub v: Vec2,
    pub grid_max: i64,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        LyapunovSettings {
            v: Vec2::new(0.04, 1.0),
            grid_max: 50,
        }
    }
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_agent() -> AgentSpec {
    Setting::I.agent()
}

fn default_horizon() -> usize {
    10_000
}

fn default_trajectories() -> usize {
    200
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::L1Norm]
}

fn default_grid() -> Vec<f64> {
    vec![0.9, 0.95, 0.99]
}

fn default_env_cap() -> usize {
    DEFAULT_ENV_CAP
}

/// A full experiment description. Only `world` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub world: World,
    #[serde(default = "default_agent")]
    pub agent: AgentSpec,
    #[serde(default)]
    pub x0: QueueState,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_trajectories")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_grid")]
    pub gamma_grid: Vec<f64>,
    #[serde(default)]
    pub direction: DirectionStrategy,
    #[serde(default)]
    pub renewal: RenewalSettings,
    #[serde(default)]
    pub probe: ProbeSettings,
    #[serde(default)]
    pub lyapunov: LyapunovSettings,
    #[serde(default = "default_env_cap")]
    pub env_cap: usize,
}

impl ExperimentConfig {
    pub fn new(world: World, agent: AgentSpec, horizon: usize, n_trajectories: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            name: default_name(),
            world,
            agent,
            x0: QueueState::ORIGIN,
            horizon,
            n_trajectories,
            master_seed,
            metrics: default_metrics(),
            gamma_grid: default_grid(),
            direction: DirectionStrategy::Default,
            renewal: RenewalSettings::default(),
            probe: ProbeSettings::default(),
            lyapunov: LyapunovSettings::default(),
            env_cap: DEFAULT_ENV_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.world.model.validate()?;
        self.agent.validate()?;
        if self.n_trajectories == 0 {
            return Err(LabError::param("n_trajectories", "must be at least 1"));
        }
        if !self.world.free && !self.x0.is_nonnegative() {
            return Err(LabError::param("x0", "must be nonnegative outside the free world"));
        }
        check_grid(&self.gamma_grid)?;
        if let Some(l) = self.renewal.direction {
            if (l.norm() - 1.0).abs() > 1e-12 {
                return Err(LabError::param("renewal.direction", "must be a unit vector"));
            }
        }
        if let Some(c) = self.renewal.cone {
            ConeSpec::new(c.l, c.restrict_quadrant)
                .map_err(|_| LabError::param("renewal.cone.l", "must be a unit vector"))?;
        }
        if self.env_cap == 0 {
            return Err(LabError::param("env_cap", "must be at least 1"));
        }
        Ok(())
    }

    pub fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    pub fn seed_of(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }

    /// Runs trajectory `index` of the ensemble.
    pub fn trajectory(&self, index: usize) -> Result<Trajectory> {
        let opts = RunOptions { env_cap: self.env_cap };
        run_trajectory_with(&self.world, &self.agent, self.x0, self.horizon, self.seed_of(index), opts)
            .map(|(t, _)| t)
    }

    /// The same experiment with the agent replaced by the green policy.
    pub fn green(&self) -> Self {
        ExperimentConfig {
            agent: AgentSpec::FixedAction { action: Action::Green },
            ..self.clone()
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(g) = grid.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(LabError::param("gamma_grid", format!("values must lie in (0, 1), got {g}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::param("gamma_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// The four Q-learning settings of the load-balancing experiments. All share
/// `ε = 0.1`, `γ = 0.1`, zero initial values and `X_0 = 0`; they differ only
/// in the step schedule and the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Constant step 0.2, local cost.
    I,
    /// Constant step 0.2, queue-total cost.
    II,
    /// Harmonic step, local cost.
    III,
    /// Harmonic step, queue-total cost.
    IV,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::I, Setting::II, Setting::III, Setting::IV];

    pub fn toggles(self) -> (StepSize, CostKind) {
        let constant = StepSize::Constant(0.2);
        match self {
            Setting::I => (constant, CostKind::LocalDelta),
            Setting::II => (constant, CostKind::QueueTotal),
            Setting::III => (StepSize::Harmonic, CostKind::LocalDelta),
            Setting::IV => (StepSize::Harmonic, CostKind::QueueTotal),
        }
    }

    pub fn agent(self) -> AgentSpec {
        let (step, cost) = self.toggles();
        AgentSpec::q_learning(0.1, 0.1, step, cost)
    }

    /// Load-balancing experiment on the bounded reference world.
    pub fn config(self, horizon: usize, n_trajectories: usize, master_seed: u64) -> ExperimentConfig {
        let world = World::new(ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE), false);
        let mut cfg = ExperimentConfig::new(world, self.agent(), horizon, n_trajectories, master_seed);
        cfg.name = format!("setting-{}", self.label());
        cfg
    }

    pub fn label(self) -> &'static str {
        match self {
            Setting::I => "i",
            Setting::II => "ii",
            Setting::III => "iii",
            Setting::IV => "iv",
        }
    }
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::domain(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn in_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match env_threads() {
        Some(n) => with_threads(n, f),
        None => Ok(f()),
    }
}

/// Runs every trajectory of `cfg` in parallel and maps it through `f`;
/// results come back in index order.
pub fn map_ensemble<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Trajectory) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    in_pool(|| {
        (0..cfg.n_trajectories)
            .into_par_iter()
            .map(|i| f(i, &cfg.trajectory(i)?))
            .collect::<Result<Vec<T>>>()
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub seed: u64,
    pub final_state: QueueState,
    pub alpha: Option<f64>,
    pub success_time: Option<usize>,
    pub escaped: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub name: String,
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub horizon: usize,
    /// Pointwise mean of `|X_n|`, `n = 0..=H`.
    pub mean_l1: Vec<f64>,
    /// Pointwise standard error of the mean (zero for a single trajectory).
    pub se_l1: Vec<f64>,
    pub summaries: Option<Vec<TrajectorySummary>>,
}

impl EnsembleResult {
    /// Average of `mean_l1` over `n ∈ [from, to]`.
    pub fn window_mean(&self, from: usize, to: usize) -> f64 {
        let w = &self.mean_l1[from..=to];
        w.iter().sum::<f64>() / w.len() as f64
    }

    /// Mean per-step increment of `mean_l1` over `[from, to]`.
    pub fn mean_increment(&self, from: usize, to: usize) -> f64 {
        (self.mean_l1[to] - self.mean_l1[from]) / (to - from) as f64
    }
}

fn summarize(cfg: &ExperimentConfig, index: usize, t: &Trajectory) -> Result<TrajectorySummary> {
    let states = if cfg.wants(Metric::SuccessTime) || cfg.wants(Metric::Escape) {
        t.state_path()
    } else {
        Vec::new()
    };
    let alpha = if cfg.wants(Metric::Alpha) && t.horizon() > 0 {
        Some(renewal::estimate_alpha(&t.actions())?.0)
    } else {
        None
    };
    let success_time = if cfg.wants(Metric::SuccessTime) {
        renewal::success_time(&states, &cfg.renewal.cone(), cfg.renewal.margin(cfg.horizon))?
    } else {
        None
    };
    let escaped = if cfg.wants(Metric::Escape) && cfg.probe.burn_in < cfg.horizon {
        Some(renewal::escapes(&states, cfg.probe.radius, cfg.probe.burn_in))
    } else {
        None
    };
    Ok(TrajectorySummary {
        index,
        seed: t.seed,
        final_state: t.final_state(),
        alpha,
        success_time,
        escaped,
    })
}

/// Pointwise mean and standard error from exact integer sums.
fn moments(sum: &[i128], sum_sq: &[i128], n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| *s as f64 / nf).collect();
    let se = sum
        .iter()
        .zip(sum_sq)
        .map(|(s, q)| {
            if n < 2 {
                return 0.0;
            }
            // n * Σx² - (Σx)² is exact in integers.
            let centered = (n as i128) * q - s * s;
            (centered as f64 / (nf * (nf - 1.0)) / nf).sqrt()
        })
        .collect();
    (mean, se)
}

pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    let want_summary = cfg
        .metrics
        .iter()
        .any(|m| !matches!(m, Metric::L1Norm));
    let per = map_ensemble(cfg, |i, t| {
        let series: Vec<i64> = t.states().map(|x| x.total()).collect();
        let summary = if want_summary { Some(summarize(cfg, i, t)?) } else { None };
        Ok((series, summary))
    })?;
    let len = cfg.horizon + 1;
    let mut sum = vec![0i128; len];
    let mut sum_sq = vec![0i128; len];
    let mut summaries = Vec::new();
    for (series, summary) in per {
        for (n, v) in series.iter().enumerate() {
            sum[n] += *v as i128;
            sum_sq[n] += (*v as i128) * (*v as i128);
        }
        summaries.extend(summary);
    }
    let (mean_l1, se_l1) = moments(&sum, &sum_sq, cfg.n_trajectories);
    Ok(EnsembleResult {
        name: cfg.name.clone(),
        master_seed: cfg.master_seed,
        n_trajectories: cfg.n_trajectories,
        horizon: cfg.horizon,
        mean_l1,
        se_l1,
        summaries: want_summary.then_some(summaries),
    })
}

/// `Σ_{i<H} γ^i c(X_i, X_{i+1})` with the cost recomputed from the states.
pub fn discounted_cost(states: &[QueueState], gamma: f64, kind: CostKind) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(LabError::param("gamma", format!("must lie in (0, 1], got {gamma}")));
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    for w in states.windows(2) {
        total += weight * transition_cost(kind, w[0], w[1]);
        weight *= gamma;
    }
    Ok(total)
}

/// Bound on the discounted mass beyond the horizon for unit-step paths:
/// `γ^H / (1-γ)` for the local cost, and
/// `γ^H ((|x1 + x2| + H) / (1-γ) + γ / (1-γ)²)` for the queue-total cost,
/// evaluated at `x0`.
pub fn truncation_bound(gamma: f64, horizon: usize, kind: CostKind, x0: QueueState) -> f64 {
    let tail = gamma.powf(horizon as f64);
    let g = 1.0 - gamma;
    match kind {
        CostKind::LocalDelta => tail / g,
        CostKind::QueueTotal => tail * ((x0.total().abs() as f64 + horizon as f64) / g + gamma / (g * g)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub gamma_grid: Vec<f64>,
    pub cost_kind: CostKind,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub green_mean: Vec<f64>,
    pub green_se: Vec<f64>,
    pub truncation_bound: Vec<f64>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    (m, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Pairwise summation in a fixed tree shape.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn discounted_ensemble(cfg: &ExperimentConfig, grid: &[f64], kind: CostKind) -> Result<(Vec<f64>, Vec<f64>)> {
    let per = map_ensemble(cfg, |_, t| {
        let states = t.state_path();
        grid.iter().map(|g| discounted_cost(&states, *g, kind)).collect::<Result<Vec<f64>>>()
    })?;
    let mut means = Vec::with_capacity(grid.len());
    let mut ses = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let col: Vec<f64> = per.iter().map(|row| row[k]).collect();
        let (m, s) = mean_se(&col);
        means.push(m);
        ses.push(s);
    }
    Ok((means, ses))
}

/// Ensemble estimates of `J_γ` for the configured agent and for the green
/// policy, under the agent's cost.
pub fn cost_curve(cfg: &ExperimentConfig, gamma_grid: &[f64]) -> Result<CostCurve> {
    check_grid(gamma_grid)?;
    let kind = cfg.agent.cost_kind();
    let empty = gamma_grid.is_empty();
    let (mean, se) = if empty { (vec![], vec![]) } else { discounted_ensemble(cfg, gamma_grid, kind)? };
    let (green_mean, green_se) = if empty {
        (vec![], vec![])
    } else {
        discounted_ensemble(&cfg.green(), gamma_grid, kind)?
    };
    Ok(CostCurve {
        gamma_grid: gamma_grid.to_vec(),
        cost_kind: kind,
        mean,
        se,
        green_mean,
        green_se,
        truncation_bound: gamma_grid.iter().map(|g| truncation_bound(*g, cfg.horizon, kind, cfg.x0)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenReference {
    /// Time average of the ensemble mean of `|X_n|` over the retained half.
    pub estimate: f64,
    /// Batch-means standard error; absent with fewer than [`BATCHES`] points.
    pub se: Option<f64>,
    pub retained: usize,
}

/// Long-run average of `|X_n|` under the green policy, discarding the first
/// half of the horizon.
pub fn green_reference(cfg: &ExperimentConfig) -> Result<GreenReference> {
    let green = ExperimentConfig {
        metrics: vec![Metric::L1Norm],
        ..cfg.green()
    };
    let ens = run_ensemble(&green)?;
    let start = cfg.horizon.div_ceil(2);
    let kept = &ens.mean_l1[start..];
    let estimate = pairwise_sum(kept) / kept.len() as f64;
    let se = batch_means_se(kept, BATCHES);
    Ok(GreenReference {
        estimate,
        se,
        retained: kept.len(),
    })
}

/// Standard error of the mean from `batches` equal batches; leading points
/// that do not fill a batch are dropped.
pub fn batch_means_se(xs: &[f64], batches: usize) -> Option<f64> {
    if batches < 2 || xs.len() < batches {
        return None;
    }
    let size = xs.len() / batches;
    let skip = xs.len() - size * batches;
    let means: Vec<f64> = xs[skip..]
        .chunks(size)
        .map(|c| pairwise_sum(c) / size as f64)
        .collect();
    Some(mean_se(&means).1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub v: Vec2,
    pub grid_max: i64,
    /// `E[F(X_1) - F(x)]` at an interior state.
    pub interior_f_drift: f64,
    /// Largest one-step drift of `F` over non-origin grid states.
    pub max_f_drift: f64,
    pub feasible: bool,
    /// Rate `c = -2 max_f_drift`, present when positive.
    pub c: Option<f64>,
    /// Smallest `B` with `E[ΔV] <= -c F + B` on the whole grid.
    pub b: Option<f64>,
    /// Non-origin states where the drift of `F` is nonnegative, capped.
    pub witnesses: Vec<QueueState>,
    pub n_witnesses: usize,
}

const MAX_WITNESSES: usize = 32;

/// Exact one-step check of `E[V(X_1) - V(x)] <= -c F(x) + B` under the green
/// policy with `F(x) = <x, v>` and `V = F²`, over `[0, grid_max]²`.
pub fn lyapunov_probe(model: &ModelSpec, v: Vec2, grid_max: i64) -> Result<LyapunovReport> {
    model.validate()?;
    if !(v.x1 >= 0.0 && v.x2 >= 0.0 && (v.x1 > 0.0 || v.x2 > 0.0)) || !v.is_finite() {
        return Err(LabError::param("v", "must lie in the nonnegative quadrant and be nonzero"));
    }
    if grid_max < 1 {
        return Err(LabError::param("grid_max", "must be at least 1"));
    }
    let laws = Region::ALL.map(|r| model.region_law(r, Action::Green));
    let law_of = |x: QueueState| -> Result<&crate::model::JumpLaw> {
        let r = Region::of(x)?;
        let k = Region::ALL.iter().position(|q| *q == r).unwrap();
        laws[k].as_ref().map_err(|e| LabError::domain(e.to_string()))
    };
    let mut rows = Vec::new();
    let mut max_f_drift = f64::NEG_INFINITY;
    let mut witnesses = Vec::new();
    let mut n_witnesses = 0;
    for x1 in 0..=grid_max {
        for x2 in 0..=grid_max {
            let x = QueueState::new(x1, x2);
            let law = law_of(x)?;
            let f = x.as_vec2().dot(v);
            let f_drift = law.drift().dot(v);
            let dv: f64 = law
                .entries()
                .iter()
                .map(|(s, p)| {
                    let g = x.apply(*s).as_vec2().dot(v);
                    p * (g * g - f * f)
                })
                .sum();
            if x != QueueState::ORIGIN {
                max_f_drift = max_f_drift.max(f_drift);
                if f_drift >= 0.0 {
                    n_witnesses += 1;
                    if witnesses.len() < MAX_WITNESSES {
                        witnesses.push(x);
                    }
                }
            }
            rows.push((f, dv));
        }
    }
    let interior_f_drift = law_of(Region::Interior.representative())?.drift().dot(v);
    let feasible = max_f_drift < 0.0;
    let (c, b) = if feasible {
        let c = -2.0 * max_f_drift;
        let b = rows.iter().map(|(f, dv)| dv + c * f).fold(f64::NEG_INFINITY, f64::max);
        (Some(c), Some(b))
    } else {
        (None, None)
    };
    Ok(LyapunovReport {
        v,
        grid_max,
        interior_f_drift,
        max_f_drift,
        feasible,
        c,
        b,
        witnesses,
        n_witnesses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub radius: i64,
    pub burn_in: usize,
    pub n_trajectories: usize,
    pub escape_fraction: f64,
    pub escape_se: f64,
    /// Fraction of trajectories with `|X_H| < H / 4`.
    pub slow_fraction: f64,
    pub mean_final_l1: f64,
}

/// Transience probe over the ensemble of `cfg`.
pub fn probe_ensemble(cfg: &ExperimentConfig) -> Result<ProbeReport> {
    let ProbeSettings { radius, burn_in } = cfg.probe;
    if burn_in >= cfg.horizon {
        return Err(LabError::param("probe.burn_in", "must be smaller than the horizon"));
    }
    let per = map_ensemble(cfg, |_, t| {
        let states = t.state_path();
        Ok((renewal::escapes(&states, radius, burn_in), t.final_state().total()))
    })?;
    let flags: Vec<bool> = per.iter().map(|p| p.0).collect();
    let (escape_fraction, escape_se) = renewal::escape_fraction(&flags)?;
    let n = per.len() as f64;
    let slow = per.iter().filter(|p| (p.1 as f64) < 0.25 * cfg.horizon as f64).count() as f64;
    let finals: Vec<f64> = per.iter().map(|p| p.1 as f64).collect();
    Ok(ProbeReport {
        radius,
        burn_in,
        n_trajectories: per.len(),
        escape_fraction,
        escape_se,
        slow_fraction: slow / n,
        mean_final_l1: pairwise_sum(&finals) / n,
    })
}
