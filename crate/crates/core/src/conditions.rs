//! Drift-condition certification for two-queue models.
//!
//! Three conditions are checked on the drifts of the red and green laws:
//!
//! 1. a vector `v ≥ 0` along which all three green drifts (interior, x-edge,
//!    y-edge) point strictly inward (`<w, v> < 0`);
//! 2. a unit direction `l` with `rho = min(<d_r, l>, <d_g, l>) > 0`;
//! 3. a quadrant interval `(alpha0, alpha1)` of mixing weights whose convex
//!    combinations `δ d_r + (1-δ) d_g` stay in the closed quadrant, with
//!    `1 - alpha1 < rho - alpha0`.
//!
//! When all three hold, red first-visit probabilities in
//! `(alpha0 / rho, (alpha1 + rho - 1) / rho)` make any local learning process
//! on the model transient.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{
    Action, LoadBalancingParams, ModelSpec, Region, ServerAllocationParams, Vec2,
};

/// A certified common direction and its margin `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub l: Vec2,
    pub rho: f64,
}

/// Mixing weights `δ` in `[alpha0, alpha1]` keep `δ d_r + (1-δ) d_g` in the
/// closed quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantInterval {
    pub alpha0: f64,
    pub alpha1: f64,
}

/// The transience window for the red first-visit probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QWindow {
    pub q0: f64,
    pub q1: f64,
}

impl QWindow {
    pub fn contains(&self, q: f64) -> bool {
        self.q0 < q && q < self.q1
    }
}

/// How to choose the common direction `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectionStrategy {
    /// `FixedAxis1` for load balancing, `FixedDiagonal` for server
    /// allocation, `Maximize` otherwise.
    #[default]
    Default,
    FixedAxis1,
    FixedDiagonal,
    Maximize,
    Custom(Vec2),
}

impl DirectionStrategy {
    pub fn resolve(self, model: &ModelSpec) -> DirectionStrategy {
        match (self, model) {
            (DirectionStrategy::Default, ModelSpec::LoadBalancing(_)) => DirectionStrategy::FixedAxis1,
            (DirectionStrategy::Default, ModelSpec::ServerAllocation(_)) => {
                DirectionStrategy::FixedDiagonal
            }
            (DirectionStrategy::Default, ModelSpec::Custom(_)) => DirectionStrategy::Maximize,
            (s, _) => s,
        }
    }
}

/// One labelled inequality `lhs < rhs` (after orientation), with the slack
/// `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCheck {
    pub label: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl LabeledCheck {
    fn less(label: &str, lhs: f64, rhs: f64) -> Self {
        LabeledCheck {
            label: label.to_string(),
            holds: lhs < rhs,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }

    fn greater(label: &str, lhs: f64, rhs: f64) -> Self {
        LabeledCheck {
            label: label.to_string(),
            holds: lhs > rhs,
            lhs,
            rhs,
            margin: lhs - rhs,
        }
    }

    fn failed(label: &str, lhs: f64, rhs: f64) -> Self {
        LabeledCheck {
            label: label.to_string(),
            holds: false,
            lhs,
            rhs,
            margin: f64::NAN,
        }
    }
}

/// Everything computed while checking a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub strategy: DirectionStrategy,
    pub drift_red: Vec2,
    pub drift_green: Vec2,
    pub drift_green_x_edge: Vec2,
    pub drift_green_y_edge: Vec2,
    pub green_vector: Option<Vec2>,
    pub direction: Option<DirectionResult>,
    pub quadrant: Option<QuadrantInterval>,
    pub green_stable: bool,
    pub common_direction: bool,
    pub window_condition: bool,
    /// `(rho - alpha0) - (1 - alpha1)`, positive when the window condition holds.
    pub window_margin: Option<f64>,
    pub q_window: Option<QWindow>,
    pub checks: Vec<LabeledCheck>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.green_stable && self.common_direction && self.window_condition
    }
}

#[derive(Debug, Clone, Copy)]
struct RatioInterval {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl RatioInterval {
    const FULL: RatioInterval = RatioInterval {
        lo: 0.0,
        lo_closed: true,
        hi: f64::INFINITY,
        hi_closed: true,
    };

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn intersect(self, other: RatioInterval) -> RatioInterval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        RatioInterval { lo, lo_closed, hi, hi_closed }
    }
}

const EMPTY: RatioInterval = RatioInterval {
    lo: 1.0,
    lo_closed: false,
    hi: 0.0,
    hi_closed: false,
};

// Ratios r = v1/v2 in [0, ∞] with <w, v> < 0; r = ∞ stands for v = e1.
fn half_plane_ratios(w: Vec2) -> RatioInterval {
    let (w1, w2) = (w.x1, w.x2);
    if w1 > 0.0 {
        let t = -w2 / w1;
        if t <= 0.0 {
            EMPTY
        } else {
            RatioInterval { lo: 0.0, lo_closed: true, hi: t, hi_closed: false }
        }
    } else if w1 < 0.0 {
        let t = -w2 / w1;
        if t < 0.0 {
            RatioInterval::FULL
        } else {
            RatioInterval { lo: t, lo_closed: false, hi: f64::INFINITY, hi_closed: true }
        }
    } else if w2 < 0.0 {
        RatioInterval { hi_closed: false, ..RatioInterval::FULL }
    } else {
        EMPTY
    }
}

/// The ratio interval `{v1 / v2}` of stabilizing vectors, if nonempty.
/// `hi = ∞` with a closed end means `v = e1` is admissible.
pub fn green_ratio_interval(d_g: Vec2, d_g_prime: Vec2, d_g_dprime: Vec2) -> Option<(f64, f64)> {
    let iv = [d_g, d_g_prime, d_g_dprime]
        .into_iter()
        .map(half_plane_ratios)
        .fold(RatioInterval::FULL, RatioInterval::intersect);
    (!iv.is_empty()).then_some((iv.lo, iv.hi))
}

/// A vector `v` in the closed quadrant, nonzero, with `<w, v> < 0` for all
/// three green drifts; `None` when the feasible cone is empty.
pub fn green_stability_vector(d_g: Vec2, d_g_prime: Vec2, d_g_dprime: Vec2) -> Option<Vec2> {
    let drifts = [d_g, d_g_prime, d_g_dprime];
    if drifts.iter().any(|d| !d.is_finite()) {
        return None;
    }
    let iv = drifts
        .into_iter()
        .map(half_plane_ratios)
        .fold(RatioInterval::FULL, RatioInterval::intersect);
    if iv.is_empty() {
        return None;
    }
    let v = if iv.hi.is_finite() {
        Vec2::new(0.5 * (iv.lo + iv.hi), 1.0)
    } else if iv.lo == 0.0 {
        Vec2::new(1.0, 1.0)
    } else {
        Vec2::new(iv.lo + 1.0, 1.0)
    };
    // the midpoint can round onto an open boundary when the interval is tiny
    drifts.iter().all(|w| w.dot(v) < 0.0).then_some(v)
}

fn min_product(d_r: Vec2, d_g: Vec2, l: Vec2) -> f64 {
    d_r.dot(l).min(d_g.dot(l))
}

fn at_angle(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Common direction for the two interior drifts.
pub fn common_direction(
    d_r: Vec2,
    d_g: Vec2,
    strategy: DirectionStrategy,
) -> Result<Option<DirectionResult>> {
    if d_r.norm() == 0.0 || d_g.norm() == 0.0 {
        return Err(LabError::domain("common direction needs nonzero drifts"));
    }
    let fixed = |l: Vec2| {
        let rho = min_product(d_r, d_g, l);
        (rho > 0.0).then_some(DirectionResult { l, rho })
    };
    Ok(match strategy {
        DirectionStrategy::FixedAxis1 => fixed(Vec2::new(1.0, 0.0)),
        DirectionStrategy::FixedDiagonal => fixed(Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
        DirectionStrategy::Custom(l) => {
            let l = l
                .normalized()
                .ok_or_else(|| LabError::domain("custom direction must be nonzero"))?;
            fixed(l)
        }
        DirectionStrategy::Maximize | DirectionStrategy::Default => maximize_direction(d_r, d_g),
    })
}

const GRID_POINTS: usize = 4096;
const ANGLE_TOL: f64 = 1e-10;

fn maximize_direction(d_r: Vec2, d_g: Vec2) -> Option<DirectionResult> {
    let f = |theta: f64| min_product(d_r, d_g, at_angle(theta));
    let step = 2.0 * PI / GRID_POINTS as f64;
    let (best_i, _) = (0..GRID_POINTS)
        .map(|i| (i, f(i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    // golden-section search on the bracketing cells; min of two cosines is
    // unimodal around its maximum
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ANGLE_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let theta = 0.5 * (a + b);
    let grid_theta = best_i as f64 * step;
    let theta = if f(theta) >= f(grid_theta) { theta } else { grid_theta };
    let l = at_angle(theta);
    let rho = min_product(d_r, d_g, l);
    (rho > 0.0).then_some(DirectionResult { l, rho })
}

// δ-range in [0, 1] where g + δ (r - g) ≥ 0.
fn nonneg_range(r: f64, g: f64) -> Option<(f64, f64)> {
    let slope = r - g;
    if slope == 0.0 {
        return (g >= 0.0).then_some((0.0, 1.0));
    }
    let root = -g / slope;
    let (lo, hi) = if slope > 0.0 { (root.max(0.0), 1.0) } else { (0.0, root.min(1.0)) };
    (lo <= hi).then_some((lo, hi))
}

/// The interval of mixing weights that keep the convex combination of the
/// drifts in the closed quadrant; `None` when empty or a single point.
pub fn quadrant_interval(d_r: Vec2, d_g: Vec2) -> Option<QuadrantInterval> {
    let (a0, a1) = nonneg_range(d_r.x1, d_g.x1)?;
    let (b0, b1) = nonneg_range(d_r.x2, d_g.x2)?;
    let (alpha0, alpha1) = (a0.max(b0), a1.min(b1));
    (alpha0 < alpha1).then_some(QuadrantInterval { alpha0, alpha1 })
}

/// `(alpha0 / rho, (alpha1 + rho - 1) / rho)` clipped to `[0, 1]`, or `None`
/// when the window is empty.
pub fn q_interval(quadrant: QuadrantInterval, rho: f64) -> Result<Option<QWindow>> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(LabError::domain(format!("rho must be positive, got {rho}")));
    }
    let q0 = (quadrant.alpha0 / rho).max(0.0);
    let q1 = ((quadrant.alpha1 + rho - 1.0) / rho).min(1.0);
    Ok((q0 < q1 && q0 < 1.0).then_some(QWindow { q0, q1 }))
}

/// Bounds `(q rho, 1 - (1 - q) rho)` on the long-run red frequency of a
/// free process whose first-visit red probability is `q`.
pub fn alpha_bounds(q: f64, rho: f64) -> (f64, f64) {
    (q * rho, 1.0 - (1.0 - q) * rho)
}

/// Full check of the three drift conditions on `model`.
pub fn model1_check(model: &ModelSpec, strategy: DirectionStrategy) -> Result<ConditionReport> {
    model.validate()?;
    let strategy = strategy.resolve(model);
    let law_drift = |r: Region, a: Action| model.region_law_unchecked(r, a).drift();
    let d_r = law_drift(Region::Interior, Action::Red);
    let d_g = law_drift(Region::Interior, Action::Green);
    let d_g_x = law_drift(Region::XEdge, Action::Green);
    let d_g_y = law_drift(Region::YEdge, Action::Green);

    let green_vector = green_stability_vector(d_g, d_g_x, d_g_y);
    let direction = common_direction(d_r, d_g, strategy)?;
    let quadrant = quadrant_interval(d_r, d_g);

    let mut checks = Vec::new();
    checks.push(LabeledCheck {
        label: "green drifts admit an inward vector v".into(),
        holds: green_vector.is_some(),
        lhs: green_vector.map_or(f64::NAN, |v| {
            [d_g, d_g_x, d_g_y].iter().map(|w| w.dot(v)).fold(f64::NEG_INFINITY, f64::max)
        }),
        rhs: 0.0,
        margin: green_vector.map_or(f64::NAN, |v| {
            -[d_g, d_g_x, d_g_y].iter().map(|w| w.dot(v)).fold(f64::NEG_INFINITY, f64::max)
        }),
    });
    let rho_eval = match strategy {
        DirectionStrategy::FixedAxis1 => Some(min_product(d_r, d_g, Vec2::new(1.0, 0.0))),
        DirectionStrategy::FixedDiagonal => {
            Some(min_product(d_r, d_g, Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)))
        }
        _ => direction.map(|d| d.rho),
    };
    checks.push(match rho_eval {
        Some(rho) => LabeledCheck::greater("rho = min(<d_r,l>, <d_g,l>) > 0", rho, 0.0),
        None => LabeledCheck::failed("rho = min(<d_r,l>, <d_g,l>) > 0", f64::NAN, 0.0),
    });

    let (window_condition, window_margin) = match (direction, quadrant) {
        (Some(dir), Some(q)) => {
            let c = LabeledCheck::less("1 - alpha1 < rho - alpha0", 1.0 - q.alpha1, dir.rho - q.alpha0);
            let out = (c.holds, Some(c.margin));
            checks.push(c);
            out
        }
        _ => {
            checks.push(LabeledCheck::failed("1 - alpha1 < rho - alpha0", f64::NAN, f64::NAN));
            (false, None)
        }
    };

    let green_stable = green_vector.is_some();
    let common = direction.is_some();
    let q_window = if green_stable && common && window_condition {
        q_interval(quadrant.unwrap(), direction.unwrap().rho)?
    } else {
        None
    };

    Ok(ConditionReport {
        strategy,
        drift_red: d_r,
        drift_green: d_g,
        drift_green_x_edge: d_g_x,
        drift_green_y_edge: d_g_y,
        green_vector,
        direction,
        quadrant,
        green_stable,
        common_direction: common,
        window_condition,
        window_margin,
        q_window,
        checks,
    })
}

/// Result of checking the closed-form sufficient inequalities of one of the
/// two worked examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LabeledCheck>,
    pub all_pass: bool,
    /// Direct evaluation of `1 - alpha1 < rho - alpha0` from the drifts; only
    /// filled for server allocation, where the closed-form inequality is not
    /// sufficient on its own.
    pub direct_window_condition: Option<bool>,
}

/// The six sufficient inequalities for load balancing.
pub fn lemma_lb_check(p: &LoadBalancingParams) -> Result<LemmaReport> {
    p.validate()?;
    let LoadBalancingParams { lambda, mu1, mu2, mu_tilde, p_r, p_g } = *p;
    let total = lambda + mu1 + mu2;
    let mut checks = vec![
        LabeledCheck::less("mu1 < lambda p_r", mu1, lambda * p_r),
        LabeledCheck::less("mu2 < lambda (1 - p_r)", mu2, lambda * (1.0 - p_r)),
        LabeledCheck::less("mu1 < lambda p_g", mu1, lambda * p_g),
        LabeledCheck::greater("mu2 > lambda (1 - p_g)", mu2, lambda * (1.0 - p_g)),
    ];
    let denom = mu2 - lambda * (1.0 - p_g);
    let label = "mu_tilde > lambda ((mu1 + mu2) p_g - mu1) / (mu2 - lambda (1 - p_g))";
    checks.push(if denom == 0.0 {
        LabeledCheck::failed(label, mu_tilde, f64::INFINITY)
    } else {
        LabeledCheck::greater(label, mu_tilde, lambda * ((mu1 + mu2) * p_g - mu1) / denom)
    });
    checks.push(LabeledCheck::less(
        "mu2 < (lambda p_r - mu1)(p_g - p_r) / (lambda + mu1 + mu2) + lambda (1 - p_g)",
        mu2,
        (lambda * p_r - mu1) * (p_g - p_r) / total + lambda * (1.0 - p_g),
    ));
    let all_pass = checks.iter().all(|c| c.holds);
    Ok(LemmaReport { checks, all_pass, direct_window_condition: None })
}

/// The closed-form inequalities for server allocation, co-reported with the
/// direct window condition.
pub fn lemma_sa_check(p: &ServerAllocationParams) -> Result<LemmaReport> {
    p.validate()?;
    let ServerAllocationParams { lambda, mu, mu_tilde } = *p;
    let mut checks = vec![
        LabeledCheck::less("lambda < mu", lambda, mu),
        LabeledCheck::less("mu < 2 lambda", mu, 2.0 * lambda),
        LabeledCheck::less("2 lambda < mu_tilde", 2.0 * lambda, mu_tilde),
    ];
    let label = "mu_tilde > mu lambda / (mu - lambda)";
    checks.push(if mu == lambda {
        LabeledCheck::failed(label, mu_tilde, f64::INFINITY)
    } else {
        LabeledCheck::greater(label, mu_tilde, mu * lambda / (mu - lambda))
    });
    checks.push(LabeledCheck::less(
        "(mu - lambda) / mu < (2 lambda - mu) / (sqrt 2 (2 lambda + mu))",
        (mu - lambda) / mu,
        FRAC_1_SQRT_2 * (2.0 * lambda - mu) / (2.0 * lambda + mu),
    ));
    let all_pass = checks.iter().all(|c| c.holds);
    let direct = model1_check(&ModelSpec::ServerAllocation(*p), DirectionStrategy::FixedDiagonal)?;
    Ok(LemmaReport {
        checks,
        all_pass,
        direct_window_condition: Some(direct.window_condition),
    })
}
