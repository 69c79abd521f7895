//! Two-queue embedded chains.
//!
//! States live on the quarter lattice `Z²₊` (or on all of `Z²` for the free
//! process). Every transition moves one job, so each law is supported on the
//! four unit steps. Laws are stored in the fixed order `+e1, +e2, -e1, -e2`
//! and sampled by inverse CDF in that order, which makes a draw a pure
//! function of the uniform it consumes.
//!
//! Two closed-form instances are provided:
//!
//! * load balancing: one arrival stream of rate `lambda` is routed to queue 1
//!   with probability `p_r` (red) or `p_g` (green); queues serve at `mu1`,
//!   `mu2` while both are busy and at `mu_tilde` when only one is.
//! * server allocation: two arrival streams of rate `lambda`; the single
//!   server works on queue 1 (red) or queue 2 (green) at rate `mu`, or on the
//!   only nonempty queue at rate `mu_tilde`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Tolerance on the total mass of a jump law.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A point of the real plane; used for drifts and directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Vec2 { x1, x2 }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x1 * k, self.x2 * k)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x1 + other.x1, self.x2 + other.x2)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;

    fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x1 - other.x1, self.x2 - other.x2)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x1, v.x2]
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.x1, self.x2)
    }
}

/// The two controls available at every state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Red,
    Green,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Red, Action::Green];

    pub fn index(self) -> usize {
        match self {
            Action::Red => 0,
            Action::Green => 1,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Action::Red => 'r',
            Action::Green => 'g',
        }
    }

    pub fn from_letter(c: &str) -> Option<Action> {
        match c {
            "r" | "red" => Some(Action::Red),
            "g" | "green" => Some(Action::Green),
            _ => None,
        }
    }
}

/// A lattice step `xi`, the displacement of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Step {
    pub dx1: i64,
    pub dx2: i64,
}

impl Step {
    pub const E1: Step = Step { dx1: 1, dx2: 0 };
    pub const E2: Step = Step { dx1: 0, dx2: 1 };
    pub const NEG_E1: Step = Step { dx1: -1, dx2: 0 };
    pub const NEG_E2: Step = Step { dx1: 0, dx2: -1 };

    /// Canonical storage order of unit steps inside a law.
    pub const UNIT_ORDER: [Step; 4] = [Step::E1, Step::E2, Step::NEG_E1, Step::NEG_E2];

    pub const fn new(dx1: i64, dx2: i64) -> Self {
        Step { dx1, dx2 }
    }

    pub fn as_vec2(self) -> Vec2 {
        Vec2::new(self.dx1 as f64, self.dx2 as f64)
    }

    pub fn is_unit(self) -> bool {
        self.dx1.abs() + self.dx2.abs() == 1
    }
}

impl From<[i64; 2]> for Step {
    fn from(v: [i64; 2]) -> Self {
        Step::new(v[0], v[1])
    }
}

impl From<Step> for [i64; 2] {
    fn from(s: Step) -> Self {
        [s.dx1, s.dx2]
    }
}

/// Queue lengths `(x1, x2)`. Nonnegative in boundary worlds, unconstrained
/// in free worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct QueueState {
    pub x1: i64,
    pub x2: i64,
}

impl QueueState {
    pub const ORIGIN: QueueState = QueueState { x1: 0, x2: 0 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        QueueState { x1, x2 }
    }

    /// `x1 + x2`, the total number of jobs.
    pub fn total(self) -> i64 {
        self.x1 + self.x2
    }

    pub fn is_nonnegative(self) -> bool {
        self.x1 >= 0 && self.x2 >= 0
    }

    pub fn apply(self, step: Step) -> QueueState {
        QueueState::new(self.x1 + step.dx1, self.x2 + step.dx2)
    }

    pub fn offset(self, other: QueueState) -> QueueState {
        QueueState::new(self.x1 + other.x1, self.x2 + other.x2)
    }

    pub fn minus(self, other: QueueState) -> QueueState {
        QueueState::new(self.x1 - other.x1, self.x2 - other.x2)
    }

    pub fn as_vec2(self) -> Vec2 {
        Vec2::new(self.x1 as f64, self.x2 as f64)
    }
}

impl From<[i64; 2]> for QueueState {
    fn from(v: [i64; 2]) -> Self {
        QueueState::new(v[0], v[1])
    }
}

impl From<QueueState> for [i64; 2] {
    fn from(s: QueueState) -> Self {
        [s.x1, s.x2]
    }
}

impl fmt::Display for QueueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Which transition regime of `Z²₊` a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    /// `x1 > 0, x2 = 0`
    XEdge,
    /// `x1 = 0, x2 > 0`
    YEdge,
    Origin,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Interior, Region::XEdge, Region::YEdge, Region::Origin];

    pub fn of(state: QueueState) -> Result<Region> {
        if !state.is_nonnegative() {
            return Err(LabError::domain(format!(
                "state {state} lies outside the nonnegative quadrant"
            )));
        }
        Ok(match (state.x1 > 0, state.x2 > 0) {
            (true, true) => Region::Interior,
            (true, false) => Region::XEdge,
            (false, true) => Region::YEdge,
            (false, false) => Region::Origin,
        })
    }

    /// A representative state of the region.
    pub fn representative(self) -> QueueState {
        match self {
            Region::Interior => QueueState::new(1, 1),
            Region::XEdge => QueueState::new(1, 0),
            Region::YEdge => QueueState::new(0, 1),
            Region::Origin => QueueState::ORIGIN,
        }
    }

    /// Whether `step` keeps every state of this region inside `Z²₊`.
    pub fn allows(self, step: Step) -> bool {
        if !step.is_unit() {
            return false;
        }
        match self {
            Region::Interior => true,
            Region::XEdge => step != Step::NEG_E2,
            Region::YEdge => step != Step::NEG_E1,
            Region::Origin => step == Step::E1 || step == Step::E2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawEntry {
    step: Step,
    prob: f64,
}

/// A finite probability law over lattice steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LawEntry>", into = "Vec<LawEntry>")]
pub struct JumpLaw {
    entries: Vec<(Step, f64)>,
}

impl JumpLaw {
    /// Validates the entries: every probability in `[0, 1]`, distinct steps,
    /// total mass within [`NORMALIZATION_TOL`] of one.
    pub fn new(entries: Vec<(Step, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(LabError::domain("jump law has no entries"));
        }
        let mut total = 0.0;
        for (i, &(step, p)) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(LabError::domain(format!(
                    "probability {p} of step {:?} is outside [0, 1]",
                    <[i64; 2]>::from(step)
                )));
            }
            if entries[..i].iter().any(|&(s, _)| s == step) {
                return Err(LabError::domain(format!(
                    "duplicate step {:?} in jump law",
                    <[i64; 2]>::from(step)
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(LabError::domain(format!(
                "jump law mass is {total}, expected 1"
            )));
        }
        Ok(JumpLaw { entries })
    }

    /// Builds a unit-step law from masses in canonical order, dropping
    /// zero-mass steps.
    fn from_unit_masses(masses: [f64; 4]) -> Self {
        let entries = Step::UNIT_ORDER
            .iter()
            .zip(masses)
            .filter(|(_, p)| *p > 0.0)
            .map(|(s, p)| (*s, p))
            .collect();
        JumpLaw { entries }
    }

    /// The uniform law on the four unit steps.
    pub fn uniform_unit() -> Self {
        Self::from_unit_masses([0.25; 4])
    }

    pub fn entries(&self) -> &[(Step, f64)] {
        &self.entries
    }

    pub fn prob(&self, step: Step) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| *s == step)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn support(&self) -> impl Iterator<Item = Step> + '_ {
        self.entries.iter().filter(|(_, p)| *p > 0.0).map(|(s, _)| *s)
    }

    /// Mean jump vector.
    pub fn drift(&self) -> Vec2 {
        self.entries
            .iter()
            .fold(Vec2::default(), |acc, (s, p)| acc + s.as_vec2().scale(*p))
    }

    /// Inverse-CDF draw over entries in stored order.
    pub fn sample(&self, u: f64) -> Step {
        let mut cum = 0.0;
        for &(step, p) in &self.entries {
            cum += p;
            if u < cum {
                return step;
            }
        }
        // u fell in the rounding gap above the accumulated mass
        self.entries
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(s, _)| *s)
            .unwrap_or(self.entries[0].0)
    }

    /// `E[<xi, v>^2]`.
    pub fn second_moment_along(&self, v: Vec2) -> f64 {
        self.entries
            .iter()
            .map(|(s, p)| {
                let d = s.as_vec2().dot(v);
                p * d * d
            })
            .sum()
    }

    fn check_region(&self, region: Region, name: &str) -> Result<()> {
        for step in self.support() {
            if !region.allows(step) {
                return Err(LabError::param(
                    name,
                    format!(
                        "step {:?} is not admissible in region {region:?}",
                        <[i64; 2]>::from(step)
                    ),
                ));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<LawEntry>> for JumpLaw {
    type Error = LabError;

    fn try_from(v: Vec<LawEntry>) -> Result<Self> {
        JumpLaw::new(v.into_iter().map(|e| (e.step, e.prob)).collect())
    }
}

impl From<JumpLaw> for Vec<LawEntry> {
    fn from(law: JumpLaw) -> Self {
        law.entries
            .into_iter()
            .map(|(step, prob)| LawEntry { step, prob })
            .collect()
    }
}

/// Mean jump of `law`.
pub fn drift(law: &JumpLaw) -> Vec2 {
    law.drift()
}

/// Inverse-CDF sampling of `law` at the uniform `u`.
pub fn sample_step(law: &JumpLaw, u: f64) -> Step {
    law.sample(u)
}

fn check_rate(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LabError::param(field, format!("rate must be positive, got {v}")))
    }
}

fn check_prob(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(LabError::param(
            field,
            format!("probability must lie in [0, 1], got {v}"),
        ))
    }
}

/// Load-balancing rates and routing probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadBalancingParams {
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu_tilde: f64,
    pub p_r: f64,
    pub p_g: f64,
}

impl LoadBalancingParams {
    /// The parameter set used throughout the numerical experiments.
    pub const REFERENCE: LoadBalancingParams = LoadBalancingParams {
        lambda: 1.5,
        mu1: 0.1,
        mu2: 0.35,
        mu_tilde: 10.8,
        p_r: 0.45,
        p_g: 0.8,
    };

    pub fn validate(&self) -> Result<()> {
        check_rate("lambda", self.lambda)?;
        check_rate("mu1", self.mu1)?;
        check_rate("mu2", self.mu2)?;
        check_rate("mu_tilde", self.mu_tilde)?;
        check_prob("p_r", self.p_r)?;
        check_prob("p_g", self.p_g)
    }

    pub fn routing(&self, action: Action) -> f64 {
        match action {
            Action::Red => self.p_r,
            Action::Green => self.p_g,
        }
    }

    fn law(&self, region: Region, action: Action) -> JumpLaw {
        let p = self.routing(action);
        let lam = self.lambda;
        match region {
            Region::Interior => {
                let total = lam + self.mu1 + self.mu2;
                JumpLaw::from_unit_masses([
                    lam * p / total,
                    lam * (1.0 - p) / total,
                    self.mu1 / total,
                    self.mu2 / total,
                ])
            }
            Region::XEdge => {
                let total = lam + self.mu_tilde;
                JumpLaw::from_unit_masses([
                    lam * p / total,
                    lam * (1.0 - p) / total,
                    self.mu_tilde / total,
                    0.0,
                ])
            }
            Region::YEdge => {
                let total = lam + self.mu_tilde;
                JumpLaw::from_unit_masses([
                    lam * p / total,
                    lam * (1.0 - p) / total,
                    0.0,
                    self.mu_tilde / total,
                ])
            }
            Region::Origin => JumpLaw::from_unit_masses([p, 1.0 - p, 0.0, 0.0]),
        }
    }
}

/// Server-allocation rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerAllocationParams {
    pub lambda: f64,
    pub mu: f64,
    pub mu_tilde: f64,
}

impl ServerAllocationParams {
    pub fn validate(&self) -> Result<()> {
        check_rate("lambda", self.lambda)?;
        check_rate("mu", self.mu)?;
        check_rate("mu_tilde", self.mu_tilde)
    }

    // The origin law (1/2, 1/2) reflects two arrival streams of equal rate.
    fn law(&self, region: Region, action: Action) -> JumpLaw {
        let lam = self.lambda;
        match region {
            Region::Interior => {
                let total = 2.0 * lam + self.mu;
                let serve = self.mu / total;
                let (d1, d2) = match action {
                    Action::Red => (serve, 0.0),
                    Action::Green => (0.0, serve),
                };
                JumpLaw::from_unit_masses([lam / total, lam / total, d1, d2])
            }
            Region::XEdge => {
                let total = 2.0 * lam + self.mu_tilde;
                JumpLaw::from_unit_masses([lam / total, lam / total, self.mu_tilde / total, 0.0])
            }
            Region::YEdge => {
                let total = 2.0 * lam + self.mu_tilde;
                JumpLaw::from_unit_masses([lam / total, lam / total, 0.0, self.mu_tilde / total])
            }
            Region::Origin => JumpLaw::from_unit_masses([0.5, 0.5, 0.0, 0.0]),
        }
    }
}

/// Arbitrary per-region, per-action laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub interior_red: JumpLaw,
    pub interior_green: JumpLaw,
    pub x_edge_red: JumpLaw,
    pub x_edge_green: JumpLaw,
    pub y_edge_red: JumpLaw,
    pub y_edge_green: JumpLaw,
    pub origin_red: JumpLaw,
    pub origin_green: JumpLaw,
}

impl CustomModel {
    /// Same interior law for both actions, boundary laws derived by
    /// redirecting forbidden steps: used for quick experiments.
    pub fn with_laws(interior_red: JumpLaw, interior_green: JumpLaw) -> Result<Self> {
        let reflect = |law: &JumpLaw, region: Region| -> Result<JumpLaw> {
            let mut masses = [0.0; 4];
            for &(s, p) in law.entries() {
                let s = if region.allows(s) {
                    s
                } else if s == Step::NEG_E1 {
                    Step::E1
                } else if s == Step::NEG_E2 {
                    Step::E2
                } else {
                    return Err(LabError::domain("custom laws must use unit steps"));
                };
                let i = Step::UNIT_ORDER.iter().position(|u| *u == s).unwrap();
                masses[i] += p;
            }
            Ok(JumpLaw::from_unit_masses(masses))
        };
        Ok(CustomModel {
            x_edge_red: reflect(&interior_red, Region::XEdge)?,
            x_edge_green: reflect(&interior_green, Region::XEdge)?,
            y_edge_red: reflect(&interior_red, Region::YEdge)?,
            y_edge_green: reflect(&interior_green, Region::YEdge)?,
            origin_red: reflect(&interior_red, Region::Origin)?,
            origin_green: reflect(&interior_green, Region::Origin)?,
            interior_red,
            interior_green,
        })
    }

    fn law(&self, region: Region, action: Action) -> &JumpLaw {
        match (region, action) {
            (Region::Interior, Action::Red) => &self.interior_red,
            (Region::Interior, Action::Green) => &self.interior_green,
            (Region::XEdge, Action::Red) => &self.x_edge_red,
            (Region::XEdge, Action::Green) => &self.x_edge_green,
            (Region::YEdge, Action::Red) => &self.y_edge_red,
            (Region::YEdge, Action::Green) => &self.y_edge_green,
            (Region::Origin, Action::Red) => &self.origin_red,
            (Region::Origin, Action::Green) => &self.origin_green,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("interior_red", Region::Interior, Action::Red),
            ("interior_green", Region::Interior, Action::Green),
            ("x_edge_red", Region::XEdge, Action::Red),
            ("x_edge_green", Region::XEdge, Action::Green),
            ("y_edge_red", Region::YEdge, Action::Red),
            ("y_edge_green", Region::YEdge, Action::Green),
            ("origin_red", Region::Origin, Action::Red),
            ("origin_green", Region::Origin, Action::Green),
        ];
        for (name, region, action) in named {
            let law = self.law(region, action);
            // re-run the mass checks in case the value was built in code
            JumpLaw::new(law.entries.clone())
                .map_err(|e| LabError::param(name, e.to_string()))?;
            law.check_region(region, name)?;
        }
        Ok(())
    }
}

/// A two-queue controlled chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LoadBalancing(LoadBalancingParams),
    ServerAllocation(ServerAllocationParams),
    Custom(CustomModel),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::LoadBalancing(p) => p.validate(),
            ModelSpec::ServerAllocation(p) => p.validate(),
            ModelSpec::Custom(c) => c.validate(),
        }
    }

    /// The law used at every state of `region`.
    pub fn region_law(&self, region: Region, action: Action) -> Result<JumpLaw> {
        self.validate()?;
        Ok(self.region_law_unchecked(region, action))
    }

    pub(crate) fn region_law_unchecked(&self, region: Region, action: Action) -> JumpLaw {
        match self {
            ModelSpec::LoadBalancing(p) => p.law(region, action),
            ModelSpec::ServerAllocation(p) => p.law(region, action),
            ModelSpec::Custom(c) => c.law(region, action).clone(),
        }
    }

    /// Interior drift under `action`.
    pub fn interior_drift(&self, action: Action) -> Result<Vec2> {
        Ok(self.region_law(Region::Interior, action)?.drift())
    }
}

/// The embedded-chain law at `state` under `action`.
pub fn jump_law(model: &ModelSpec, state: QueueState, action: Action) -> Result<JumpLaw> {
    let region = Region::of(state)?;
    model.region_law(region, action)
}

/// The state-independent law of the free process: the interior law.
pub fn free_jump_law(model: &ModelSpec, action: Action) -> Result<JumpLaw> {
    model.region_law(Region::Interior, action)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lb() -> ModelSpec {
        ModelSpec::LoadBalancing(LoadBalancingParams::REFERENCE)
    }

    fn sa(lambda: f64, mu: f64, mu_tilde: f64) -> ModelSpec {
        ModelSpec::ServerAllocation(ServerAllocationParams {
            lambda,
            mu,
            mu_tilde,
        })
    }

    fn assert_law(law: &JumpLaw, expected: &[(Step, f64)], tol: f64) {
        assert_eq!(law.entries().len(), expected.len(), "{law:?}");
        for (&(s, p), &(es, ep)) in law.entries().iter().zip(expected) {
            assert_eq!(s, es);
            assert!((p - ep).abs() < tol, "{s:?}: {p} vs {ep}");
        }
    }

    #[test]
    fn load_balancing_interior_red() {
        let law = jump_law(&lb(), QueueState::new(3, 2), Action::Red).unwrap();
        assert_law(
            &law,
            &[
                (Step::E1, 0.346154),
                (Step::E2, 0.423077),
                (Step::NEG_E1, 0.051282),
                (Step::NEG_E2, 0.179487),
            ],
            5e-7,
        );
    }

    #[test]
    fn load_balancing_origin_green() {
        let law = jump_law(&lb(), QueueState::ORIGIN, Action::Green).unwrap();
        assert_law(&law, &[(Step::E1, 0.8), (Step::E2, 0.2)], 1e-15);
    }

    #[test]
    fn server_allocation_edge() {
        for a in Action::ALL {
            let law = jump_law(&sa(1.0, 1.2, 7.0), QueueState::new(5, 0), a).unwrap();
            assert_law(
                &law,
                &[(Step::E1, 1.0 / 9.0), (Step::E2, 1.0 / 9.0), (Step::NEG_E1, 7.0 / 9.0)],
                1e-15,
            );
        }
    }

    #[test]
    fn drifts() {
        let d = jump_law(&lb(), QueueState::new(1, 1), Action::Red).unwrap().drift();
        assert!((d.x1 - 0.294872).abs() < 5e-7 && (d.x2 - 0.243590).abs() < 5e-7);
        assert_eq!(JumpLaw::uniform_unit().drift(), Vec2::new(0.0, 0.0));
        let d = free_jump_law(&sa(1.0, 1.2, 7.0), Action::Green).unwrap().drift();
        assert!((d.x1 - 0.3125).abs() < 1e-15 && (d.x2 + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf() {
        let law = JumpLaw::new(vec![(Step::E1, 0.5), (Step::NEG_E1, 0.5)]).unwrap();
        assert_eq!(sample_step(&law, 0.25), Step::E1);
        assert_eq!(sample_step(&law, 0.75), Step::NEG_E1);
        let red = jump_law(&lb(), QueueState::new(1, 1), Action::Red).unwrap();
        assert_eq!(sample_step(&red, 0.40), Step::E2);
        assert_eq!(sample_step(&red, 0.0), Step::E1);
        assert_eq!(sample_step(&red, 1.0 - f64::EPSILON), Step::NEG_E2);
    }

    #[test]
    fn free_laws() {
        let g = free_jump_law(&lb(), Action::Green).unwrap();
        assert_law(
            &g,
            &[
                (Step::E1, 0.615385),
                (Step::E2, 0.153846),
                (Step::NEG_E1, 0.051282),
                (Step::NEG_E2, 0.179487),
            ],
            5e-7,
        );
        let r = free_jump_law(&sa(1.0, 1.2, 7.0), Action::Red).unwrap();
        assert_law(&r, &[(Step::E1, 0.3125), (Step::E2, 0.3125), (Step::NEG_E1, 0.375)], 1e-15);
        let u = JumpLaw::uniform_unit();
        let c = ModelSpec::Custom(CustomModel::with_laws(u.clone(), u).unwrap());
        assert_eq!(
            free_jump_law(&c, Action::Red).unwrap(),
            free_jump_law(&c, Action::Green).unwrap()
        );
    }

    #[test]
    fn invalid_inputs() {
        let mut p = LoadBalancingParams::REFERENCE;
        p.p_r = 1.5;
        let err = jump_law(&ModelSpec::LoadBalancing(p), QueueState::ORIGIN, Action::Red);
        assert!(matches!(err, Err(LabError::Parameter { ref field, .. }) if field == "p_r"));
        assert!(matches!(sa(0.0, 1.0, 1.0).validate(), Err(LabError::Parameter { .. })));
        assert!(matches!(
            jump_law(&lb(), QueueState::new(-1, 2), Action::Red),
            Err(LabError::Domain(_))
        ));
        assert!(JumpLaw::new(vec![(Step::E1, 0.5), (Step::E1, 0.5)]).is_err());
        assert!(JumpLaw::new(vec![(Step::E1, 0.5), (Step::E2, 0.4)]).is_err());
        assert!(JumpLaw::new(vec![(Step::E1, 1.2), (Step::E2, -0.2)]).is_err());
    }

    #[test]
    fn custom_boundary_compliance() {
        let u = JumpLaw::uniform_unit();
        let mut c = CustomModel::with_laws(u.clone(), u.clone()).unwrap();
        c.validate().unwrap();
        c.x_edge_green = u;
        let err = c.validate().unwrap_err();
        assert!(matches!(err, LabError::Parameter { ref field, .. } if field == "x_edge_green"));
    }

    #[test]
    fn l1_drift_identities() {
        let p = LoadBalancingParams::REFERENCE;
        let expect = (p.lambda - p.mu1 - p.mu2) / (p.lambda + p.mu1 + p.mu2);
        for a in Action::ALL {
            let d = lb().interior_drift(a).unwrap();
            assert!((d.dot(Vec2::new(1.0, 1.0)) - expect).abs() < 1e-15);
        }
        assert!((expect - 0.538462).abs() < 5e-7);
        let (l, m) = (1.0, 1.2);
        for a in Action::ALL {
            let d = sa(l, m, 7.0).interior_drift(a).unwrap();
            assert!((d.dot(Vec2::new(1.0, 1.0)) - (2.0 * l - m) / (2.0 * l + m)).abs() < 1e-15);
        }
    }

    #[test]
    fn model_json_shape() {
        let json = serde_json::to_value(lb()).unwrap();
        assert_eq!(json["kind"], "load_balancing");
        assert_eq!(json["mu_tilde"], 10.8);
        let back: ModelSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, lb());
        let bad = serde_json::json!({"kind": "server_allocation", "lambda": 1.0, "mu": 1.2, "mu_tilde": 7.0, "nu": 1});
        assert!(serde_json::from_value::<ModelSpec>(bad).is_err());
        let u = JumpLaw::uniform_unit();
        let c = ModelSpec::Custom(CustomModel::with_laws(u.clone(), u).unwrap());
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
