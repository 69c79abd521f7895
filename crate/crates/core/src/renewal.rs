//! Finite-horizon estimators for the regenerative structure of a path.
//!
//! Infinite-future events ("never undercut afterwards", "stays in the cone
//! forever") are replaced by checks over the whole remaining horizon plus a
//! censoring margin: no index later than `H - margin` is ever certified.
//! All scans are O(H) through suffix minima.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::model::{Action, QueueState, Vec2};

const UNIT_TOL: f64 = 1e-12;

/// Minimum survival count for a level to enter the tail fit.
pub const TAIL_MIN_COUNT: usize = 5;

/// Minimum number of cycles for the regenerative confidence interval.
pub const MIN_CYCLES_FOR_CI: usize = 30;

fn check_unit(l: Vec2) -> Result<()> {
    if !l.is_finite() || (l.norm() - 1.0).abs() > UNIT_TOL {
        return Err(LabError::domain(format!("direction {l} is not a unit vector")));
    }
    Ok(())
}

/// Default censoring margin for a horizon.
pub fn default_margin(horizon: usize) -> usize {
    horizon / 10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPath {
    pub values: Vec<f64>,
    pub l: Vec2,
}

impl ProjectedPath {
    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `S_{n+1} - S_n`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// `S_n = <X_n, l>` for every state of the path.
pub fn project(states: &[QueueState], l: Vec2) -> Result<ProjectedPath> {
    check_unit(l)?;
    Ok(ProjectedPath {
        values: states.iter().map(|x| x.as_vec2().dot(l)).collect(),
        l,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTimes {
    pub certified: Vec<usize>,
    /// Largest certifiable index, `H - margin`; negative when margin exceeds H.
    pub censor_bound: i64,
    pub horizon: usize,
    /// The last index `H` was certified with an empty future.
    pub vacuous_last: bool,
}

/// Strict minima of `values[n+1..]` for each `n` (`+inf` for the last index).
fn suffix_min_after<T: Copy + PartialOrd>(values: &[T], top: T) -> Vec<T> {
    let mut out = vec![top; values.len()];
    let mut m = top;
    for n in (0..values.len()).rev() {
        out[n] = m;
        if values[n] < m {
            m = values[n];
        }
    }
    out
}

/// Times `n` where `S_n` is a strict running maximum, every later value on the
/// horizon is strictly above `S_n`, and `n <= H - margin`.
pub fn record_times(path: &ProjectedPath, margin: usize) -> RecordTimes {
    let s = &path.values;
    let horizon = path.horizon();
    let censor_bound = horizon as i64 - margin as i64;
    let mut certified = Vec::new();
    if !s.is_empty() {
        let future_min = suffix_min_after(s, f64::INFINITY);
        let mut past_max = f64::NEG_INFINITY;
        for n in 0..s.len() {
            if n as i64 > censor_bound {
                break;
            }
            if s[n] > past_max && future_min[n] > s[n] {
                certified.push(n);
            }
            past_max = past_max.max(s[n]);
        }
    }
    let vacuous_last = !s.is_empty() && certified.last() == Some(&horizon);
    RecordTimes {
        certified,
        censor_bound,
        horizon,
        vacuous_last,
    }
}

/// Checks a single index against both record clauses by direct scanning.
pub fn replay_record(path: &ProjectedPath, n: usize) -> bool {
    let s = &path.values;
    n < s.len() && s[..n].iter().all(|&v| s[n] > v) && s[n + 1..].iter().all(|&v| v - s[n] > 0.0)
}

/// The cone `{z : <z, l> > 0}`, optionally intersected with the closed
/// nonnegative quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub l: Vec2,
    #[serde(default = "yes")]
    pub restrict_quadrant: bool,
}

fn yes() -> bool {
    true
}

impl ConeSpec {
    pub fn new(l: Vec2, restrict_quadrant: bool) -> Result<Self> {
        check_unit(l)?;
        Ok(ConeSpec { l, restrict_quadrant })
    }

    pub fn contains(&self, z: QueueState) -> bool {
        z.as_vec2().dot(self.l) > 0.0 && (!self.restrict_quadrant || (z.x1 >= 0 && z.x2 >= 0))
    }
}

/// First `n <= H - margin` with both coordinates positive, coordinate sum a
/// strict running record, and every later increment `X_{n+i} - X_n` in the
/// cone.
pub fn success_time(states: &[QueueState], cone: &ConeSpec, margin: usize) -> Result<Option<usize>> {
    check_unit(cone.l)?;
    if states.is_empty() {
        return Ok(None);
    }
    let horizon = states.len() - 1;
    if margin > horizon {
        return Ok(None);
    }
    let proj: Vec<f64> = states.iter().map(|x| x.as_vec2().dot(cone.l)).collect();
    let proj_min = suffix_min_after(&proj, f64::INFINITY);
    let x1: Vec<i64> = states.iter().map(|x| x.x1).collect();
    let x2: Vec<i64> = states.iter().map(|x| x.x2).collect();
    let x1_min = suffix_min_after(&x1, i64::MAX);
    let x2_min = suffix_min_after(&x2, i64::MAX);
    let mut best_total = i64::MIN;
    for n in 0..=horizon - margin {
        let x = states[n];
        let record = x.total() > best_total;
        best_total = best_total.max(x.total());
        if !(record && x.x1 > 0 && x.x2 > 0) {
            continue;
        }
        let along = proj_min[n] == f64::INFINITY || proj_min[n] - proj[n] > 0.0;
        let quadrant = !cone.restrict_quadrant || (x1_min[n] >= x.x1 && x2_min[n] >= x.x2);
        if along && quadrant && future_in_cone(states, cone, n) {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

// Suffix minima of projections prefilter; membership is decided on the
// integer increments themselves.
fn future_in_cone(states: &[QueueState], cone: &ConeSpec, n: usize) -> bool {
    states[n + 1..].iter().all(|y| cone.contains(y.minus(states[n])))
}

/// Red frequency and its binomial standard error.
pub fn estimate_alpha(actions: &[Action]) -> Result<(f64, f64)> {
    if actions.is_empty() {
        return Err(LabError::domain("cannot estimate a red frequency from zero steps"));
    }
    let n = actions.len() as f64;
    let reds = actions.iter().filter(|a| **a == Action::Red).count() as f64;
    let a = reds / n;
    Ok((a, (a * (1.0 - a) / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    /// `(X_H - X_0) / H`.
    pub point: Vec2,
    /// Componentwise standard error treating increments as independent.
    pub naive_se: Vec2,
    /// 95% half-widths from the cycle ratio estimator.
    pub per_cycle_ci: Option<Vec2>,
    pub n_used: usize,
    pub cycles_used: usize,
}

/// Limiting-drift estimate from a path, with a regenerative interval when at
/// least [`MIN_CYCLES_FOR_CI`] complete cycles are certified.
pub fn estimate_drift(states: &[QueueState], records: Option<&RecordTimes>) -> Result<DriftEstimate> {
    if states.len() < 2 {
        return Err(LabError::domain("drift needs a horizon of at least one step"));
    }
    let h = states.len() - 1;
    let total = states[h].minus(states[0]);
    let point = Vec2::new(total.x1 as f64 / h as f64, total.x2 as f64 / h as f64);

    let mut sq = [0.0f64; 2];
    for w in states.windows(2) {
        let d = w[1].minus(w[0]);
        sq[0] += (d.x1 as f64 - point.x1).powi(2);
        sq[1] += (d.x2 as f64 - point.x2).powi(2);
    }
    let denom = if h > 1 { (h - 1) as f64 * h as f64 } else { f64::INFINITY };
    let naive_se = Vec2::new((sq[0] / denom).sqrt(), (sq[1] / denom).sqrt());

    let mut per_cycle_ci = None;
    let mut cycles_used = 0;
    if let Some(rec) = records {
        let t = &rec.certified;
        let m = t.len().saturating_sub(1);
        if m >= MIN_CYCLES_FOR_CI {
            let cycles: Vec<(Vec2, f64)> = t
                .windows(2)
                .map(|w| (states[w[1]].minus(states[w[0]]).as_vec2(), (w[1] - w[0]) as f64))
                .collect();
            let gap_sum: f64 = cycles.iter().map(|c| c.1).sum();
            let disp_sum = cycles.iter().fold(Vec2::default(), |acc, c| acc + c.0);
            let ratio = disp_sum.scale(1.0 / gap_sum);
            let mean_gap = gap_sum / m as f64;
            let mut var = [0.0f64; 2];
            for (d, g) in &cycles {
                var[0] += (d.x1 - ratio.x1 * g).powi(2);
                var[1] += (d.x2 - ratio.x2 * g).powi(2);
            }
            let scale = 1.96 / (mean_gap * (m as f64).sqrt());
            let sd = |v: f64| (v / (m - 1) as f64).sqrt();
            per_cycle_ci = Some(Vec2::new(scale * sd(var[0]), scale * sd(var[1])));
            cycles_used = m;
        }
    }
    Ok(DriftEstimate {
        point,
        naive_se,
        per_cycle_ci,
        n_used: h,
        cycles_used,
    })
}

/// Least-squares fit of log empirical survival of the gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub gaps: Vec<usize>,
    /// Summed Euclidean jump norms within each cycle.
    pub scopes: Vec<f64>,
    pub displacements: Vec<Vec2>,
    pub tail_fit: Option<TailFit>,
}

pub fn cycle_stats(states: &[QueueState], records: &RecordTimes) -> Result<CycleStats> {
    let t = &records.certified;
    if t.len() < 2 {
        return Err(LabError::InsufficientData(format!(
            "cycle statistics need two record times, got {}",
            t.len()
        )));
    }
    if *t.last().unwrap() >= states.len() {
        return Err(LabError::domain("record time beyond the end of the path"));
    }
    let jump_norm: Vec<f64> = states.windows(2).map(|w| w[1].minus(w[0]).as_vec2().norm()).collect();
    let mut gaps = Vec::with_capacity(t.len() - 1);
    let mut scopes = Vec::with_capacity(t.len() - 1);
    let mut displacements = Vec::with_capacity(t.len() - 1);
    for w in t.windows(2) {
        gaps.push(w[1] - w[0]);
        scopes.push(jump_norm[w[0]..w[1]].iter().sum());
        displacements.push(states[w[1]].minus(states[w[0]]).as_vec2());
    }
    let tail_fit = survival_fit(&gaps);
    Ok(CycleStats {
        gaps,
        scopes,
        displacements,
        tail_fit,
    })
}

/// Fits `log P(G >= g) = a + b g` over the distinct gap values `g` whose
/// survival count is at least [`TAIL_MIN_COUNT`]. Needs three levels.
pub fn survival_fit(gaps: &[usize]) -> Option<TailFit> {
    let mut sorted = gaps.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut pts = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let g = sorted[i];
        let at_least = sorted.len() - i;
        if at_least < TAIL_MIN_COUNT {
            break;
        }
        pts.push((g as f64, (at_least as f64 / n).ln()));
        while i < sorted.len() && sorted[i] == g {
            i += 1;
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(TailFit {
        slope,
        intercept,
        r_squared,
        levels: pts.len(),
    })
}

/// Sample lag-1 autocorrelation; `None` below three points or at zero variance.
pub fn lag1_autocorrelation(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    if den == 0.0 {
        return None;
    }
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Some(num / den)
}

/// Whether the path stays outside `{x1 + x2 <= radius}` at every time after `burn_in`.
pub fn escapes(states: &[QueueState], radius: i64, burn_in: usize) -> bool {
    states.iter().skip(burn_in + 1).all(|x| x.total() > radius)
}

/// Fraction of escaping paths and its binomial standard error.
pub fn transience_probe<'a, I>(paths: I, radius: i64, burn_in: usize) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a [QueueState]>,
{
    let mut flags = Vec::new();
    for p in paths {
        if burn_in + 1 >= p.len() {
            return Err(LabError::domain(format!(
                "burn-in {burn_in} leaves nothing of a horizon of {}",
                p.len().saturating_sub(1)
            )));
        }
        flags.push(escapes(p, radius, burn_in));
    }
    escape_fraction(&flags)
}

pub fn escape_fraction(flags: &[bool]) -> Result<(f64, f64)> {
    if flags.is_empty() {
        return Err(LabError::domain("transience probe over zero trajectories"));
    }
    let n = flags.len() as f64;
    let p = flags.iter().filter(|f| **f).count() as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}
