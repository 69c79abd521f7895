//! Local learning processes.
//!
//! A process keeps a sparse *environment*: two stored reals per visited
//! state, one per action. Each step reads the environment at the current
//! state to pick an action, moves according to the world's law, and then
//! rewrites the stored value of the (state, action) pair it just used. No
//! other entry is touched, and never-visited states carry the same default
//! pair everywhere.
//!
//! Randomness: every trajectory owns one PCG32 generator (64-bit state),
//! seeded from the trajectory seed through `Pcg32::seed_from_u64`. Each step
//! consumes exactly two uniforms, the first for the action and the second
//! for the jump, regardless of the agent. Ensemble members get their seeds
//! from [`derive_seed`].

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{Action, JumpLaw, ModelSpec, QueueState, Region};

/// Default cap on the number of states an environment may hold.
pub const DEFAULT_ENV_CAP: usize = 10_000_000;

/// Per-trajectory generator.
pub type TrajectoryRng = Pcg32;

/// Seed of ensemble member `index`: a SplitMix64 finalizer applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trajectory_rng(seed: u64) -> TrajectoryRng {
    Pcg32::seed_from_u64(seed)
}

/// Step-size schedule of Q-learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Constant(f64),
    /// `1 / (n + 1)` on the global step counter `n`.
    Harmonic,
    /// `1 / (k + 1)` where `k` counts earlier updates of the same pair.
    HarmonicPerVisit,
}

/// Transition cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `(y1 - x1) + (y2 - x2)`
    #[default]
    LocalDelta,
    /// `x1 + x2`
    QueueTotal,
}

/// Which stored value counts as greedy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Greedy {
    /// Smallest stored cost-to-go.
    #[default]
    ArgMin,
    /// Largest stored value, the literal form of the decision rule.
    ArgMaxAsWritten,
}

fn default_greedy() -> Greedy {
    Greedy::ArgMin
}

/// Parameters of ε-greedy asynchronous Q-learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QLearningSpec {
    pub epsilon: f64,
    pub gamma: f64,
    pub step: StepSize,
    #[serde(default)]
    pub cost_kind: CostKind,
    #[serde(default)]
    pub q0_init: f64,
    #[serde(default = "default_greedy")]
    pub greedy: Greedy,
}

/// A decision/update pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    QLearning(QLearningSpec),
    FixedAction { action: Action },
    /// Red with probability `q` at every step, ignoring the environment.
    Coin { q: f64 },
}

impl AgentSpec {
    pub fn q_learning(epsilon: f64, gamma: f64, step: StepSize, cost_kind: CostKind) -> Self {
        AgentSpec::QLearning(QLearningSpec {
            epsilon,
            gamma,
            step,
            cost_kind,
            q0_init: 0.0,
            greedy: Greedy::ArgMin,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(LabError::param(field, format!("must lie in [0, 1], got {v}")))
            }
        };
        match self {
            AgentSpec::QLearning(q) => {
                prob("epsilon", q.epsilon)?;
                if !(q.gamma > 0.0 && q.gamma <= 1.0) {
                    return Err(LabError::param("gamma", format!("must lie in (0, 1], got {}", q.gamma)));
                }
                if let StepSize::Constant(d) = q.step {
                    prob("step", d)?;
                }
                if !q.q0_init.is_finite() {
                    return Err(LabError::param("q0_init", "must be finite"));
                }
                Ok(())
            }
            AgentSpec::FixedAction { .. } => Ok(()),
            AgentSpec::Coin { q } => prob("q", *q),
        }
    }

    /// Default stored pair of never-visited states.
    pub fn initial_value(&self) -> f64 {
        match self {
            AgentSpec::QLearning(q) => q.q0_init,
            _ => 0.0,
        }
    }

    /// Cost recorded on each transition.
    pub fn cost_kind(&self) -> CostKind {
        match self {
            AgentSpec::QLearning(q) => q.cost_kind,
            _ => CostKind::LocalDelta,
        }
    }

    /// Probability of red at the first visit to any state.
    pub fn first_visit_red_probability(&self) -> f64 {
        let v = self.initial_value();
        red_probability(self, [v, v])
    }
}

/// Boundary world (`Z²₊` with edge laws) or its free relaxation on `Z²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct World {
    pub model: ModelSpec,
    #[serde(default)]
    pub free: bool,
}

impl World {
    pub fn new(model: ModelSpec, free: bool) -> Self {
        World { model, free }
    }

    pub fn dynamics(&self) -> Result<Dynamics> {
        self.model.validate()?;
        let laws = Region::ALL.map(|r| {
            let r = if self.free { Region::Interior } else { r };
            Action::ALL.map(|a| self.model.region_law_unchecked(r, a))
        });
        Ok(Dynamics { laws, free: self.free })
    }
}

/// Precomputed laws of a [`World`].
#[derive(Debug, Clone)]
pub struct Dynamics {
    laws: [[JumpLaw; 2]; 4],
    free: bool,
}

impl Dynamics {
    pub fn is_free(&self) -> bool {
        self.free
    }

    pub fn law(&self, state: QueueState, action: Action) -> Result<&JumpLaw> {
        let region = if self.free { Region::Interior } else { Region::of(state)? };
        let row = Region::ALL.iter().position(|r| *r == region).unwrap();
        Ok(&self.laws[row][action.index()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EnvEntry {
    values: [f64; 2],
    updates: [u64; 2],
}

/// Sparse per-state, per-action stored values.
#[derive(Debug, Clone)]
pub struct Environment {
    table: HashMap<QueueState, EnvEntry>,
    default_value: [f64; 2],
    cap: usize,
}

impl Environment {
    pub fn new(default: f64) -> Self {
        Self::with_cap(default, DEFAULT_ENV_CAP)
    }

    pub fn with_cap(default: f64, cap: usize) -> Self {
        Environment {
            table: HashMap::new(),
            default_value: [default; 2],
            cap,
        }
    }

    pub fn default_value(&self) -> [f64; 2] {
        self.default_value
    }

    /// Stored pair at `state`, or the default if never visited.
    pub fn get(&self, state: QueueState) -> [f64; 2] {
        self.table.get(&state).map_or(self.default_value, |e| e.values)
    }

    pub fn value(&self, state: QueueState, action: Action) -> f64 {
        self.get(state)[action.index()]
    }

    pub fn is_visited(&self, state: QueueState) -> bool {
        self.table.contains_key(&state)
    }

    /// Number of visited states.
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Visited states with their stored pairs.
    pub fn iter(&self) -> impl Iterator<Item = (QueueState, [f64; 2])> + '_ {
        self.table.iter().map(|(s, e)| (*s, e.values))
    }

    /// Number of updates applied so far to `(state, action)`.
    pub fn updates(&self, state: QueueState, action: Action) -> u64 {
        self.table.get(&state).map_or(0, |e| e.updates[action.index()])
    }

    fn entry(&mut self, state: QueueState) -> Result<&mut EnvEntry> {
        if !self.table.contains_key(&state) && self.table.len() >= self.cap {
            return Err(LabError::Overflow { cap: self.cap });
        }
        let default = self.default_value;
        Ok(self.table.entry(state).or_insert(EnvEntry {
            values: default,
            updates: [0; 2],
        }))
    }

    /// Marks `state` visited without changing its values.
    pub fn touch(&mut self, state: QueueState) -> Result<()> {
        self.entry(state).map(|_| ())
    }
}

/// One realized transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub state: QueueState,
    pub action: Action,
    pub next_state: QueueState,
    pub cost: f64,
    pub first_visit: bool,
}

/// A realized path with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: QueueState,
    pub steps: Vec<StepRecord>,
    pub seed: u64,
    pub agent: AgentSpec,
    pub world: World,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// `X_0, X_1, …, X_H`.
    pub fn states(&self) -> impl Iterator<Item = QueueState> + '_ {
        std::iter::once(self.x0).chain(self.steps.iter().map(|s| s.next_state))
    }

    /// `X_0, …, X_H` collected.
    pub fn state_path(&self) -> Vec<QueueState> {
        self.states().collect()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn final_state(&self) -> QueueState {
        self.steps.last().map_or(self.x0, |s| s.next_state)
    }
}

/// Probability of choosing red given the stored pair at the current state.
pub fn red_probability(agent: &AgentSpec, values: [f64; 2]) -> f64 {
    match agent {
        AgentSpec::QLearning(q) => {
            let [red, green] = values;
            let red_greedy = match q.greedy {
                Greedy::ArgMin => red <= green,
                Greedy::ArgMaxAsWritten => red >= green,
            };
            let size = if red == green { 2.0 } else { 1.0 };
            let greedy_mass = if red_greedy { (1.0 - q.epsilon) / size } else { 0.0 };
            greedy_mass + q.epsilon / 2.0
        }
        AgentSpec::FixedAction { action: Action::Red } => 1.0,
        AgentSpec::FixedAction { action: Action::Green } => 0.0,
        AgentSpec::Coin { q } => *q,
    }
}

/// Draws the action from the uniform `u`: red iff `u < P(red)`.
pub fn decide(agent: &AgentSpec, values: [f64; 2], u: f64) -> Action {
    match agent {
        AgentSpec::FixedAction { action } => *action,
        _ if u < red_probability(agent, values) => Action::Red,
        _ => Action::Green,
    }
}

pub fn transition_cost(kind: CostKind, x: QueueState, y: QueueState) -> f64 {
    match kind {
        CostKind::LocalDelta => ((y.x1 - x.x1) + (y.x2 - x.x2)) as f64,
        CostKind::QueueTotal => (x.x1 + x.x2) as f64,
    }
}

/// Applies the agent's update for the transition `rec`. Only the entry at
/// `(rec.state, rec.action)` changes; the state is marked visited.
pub fn update_env(agent: &AgentSpec, env: &mut Environment, rec: &StepRecord) -> Result<()> {
    match agent {
        AgentSpec::QLearning(q) => {
            let next = env.get(rec.next_state);
            let target = rec.cost + q.gamma * next[0].min(next[1]);
            let a = rec.action.index();
            let entry = env.entry(rec.state)?;
            let delta = match q.step {
                StepSize::Constant(d) => d,
                StepSize::Harmonic => 1.0 / (rec.n as f64 + 1.0),
                StepSize::HarmonicPerVisit => 1.0 / (entry.updates[a] as f64 + 1.0),
            };
            if delta != 0.0 {
                entry.values[a] = (1.0 - delta) * entry.values[a] + delta * target;
            }
            entry.updates[a] += 1;
            Ok(())
        }
        AgentSpec::FixedAction { .. } | AgentSpec::Coin { .. } => env.touch(rec.state),
    }
}

/// One step of the process from `state` at time `n`. Returns the record;
/// the new state is `record.next_state`.
pub fn llp_step(
    dynamics: &Dynamics,
    agent: &AgentSpec,
    state: QueueState,
    env: &mut Environment,
    n: u64,
    rng: &mut TrajectoryRng,
) -> Result<StepRecord> {
    let u_action: f64 = rng.random();
    let u_jump: f64 = rng.random();
    let first_visit = !env.is_visited(state);
    let action = decide(agent, env.get(state), u_action);
    let step = dynamics.law(state, action)?.sample(u_jump);
    let next_state = state.apply(step);
    let rec = StepRecord {
        n,
        state,
        action,
        next_state,
        cost: transition_cost(agent.cost_kind(), state, next_state),
        first_visit,
    };
    update_env(agent, env, &rec)?;
    Ok(rec)
}

/// Options for [`run_trajectory_with`].
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub env_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { env_cap: DEFAULT_ENV_CAP }
    }
}

/// Runs `horizon` steps from `x0` with a fresh environment.
pub fn run_trajectory(
    world: &World,
    agent: &AgentSpec,
    x0: QueueState,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    run_trajectory_with(world, agent, x0, horizon, seed, RunOptions::default()).map(|(t, _)| t)
}

/// As [`run_trajectory`], also returning the final environment.
pub fn run_trajectory_with(
    world: &World,
    agent: &AgentSpec,
    x0: QueueState,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<(Trajectory, Environment)> {
    agent.validate()?;
    let dynamics = world.dynamics()?;
    if !world.free {
        Region::of(x0)?;
    }
    let mut env = Environment::with_cap(agent.initial_value(), opts.env_cap);
    let mut rng = trajectory_rng(seed);
    let mut steps = Vec::with_capacity(horizon);
    let mut state = x0;
    for n in 0..horizon as u64 {
        let rec = llp_step(&dynamics, agent, state, &mut env, n, &mut rng)?;
        state = rec.next_state;
        steps.push(rec);
    }
    let traj = Trajectory {
        x0,
        steps,
        seed,
        agent: *agent,
        world: world.clone(),
    };
    Ok((traj, env))
}
