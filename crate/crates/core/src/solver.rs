//! Descent and Newton-type iterations on the curve manifold.
//!
//! Each step computes a direction, picks a step length along the retraction
//! `c + tΔn`, and records objective, distance and step norms so the
//! contraction behaviour can be inspected afterwards.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{assemble_general_form, hessian_at_solution, solve_hessian};
use crate::curve::{equidistant_params, CurveGeometry, DiscreteCurve, NormalField, Point};
use crate::error::{Result, ShapeError};
use crate::functional::{
    boundary_kernel, distance_bar, distance_tilde, evaluate_general, evaluate_mso, AngleConvention, Family,
    VolumeFunctional,
};
use crate::metric::{self, MetricParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SteepestDescent,
    /// Newton with the pointwise operator `ν` evaluated along the iterates.
    NewtonMultiplicative,
    /// Newton with the assembled Riemannian Hessian form.
    NewtonGeneralForm,
}

impl Method {
    pub fn short_name(self) -> &'static str {
        match self {
            Method::SteepestDescent => "sd",
            Method::NewtonMultiplicative => "newton",
            Method::NewtonGeneralForm => "newton-general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineSearch {
    /// Doubling from `t = 1e-3` up to `bracket_max`, then golden section.
    Exact {
        bracket_max: f64,
        tolerance: f64,
    },
    /// Best of `t = step, 2·step, …, max`; scanning stops at the first
    /// step that degenerates the curve.
    Grid {
        step: f64,
        max: f64,
    },
    Fixed(f64),
    /// `t = 1`.
    Unit,
}

impl LineSearch {
    pub const EXACT: LineSearch = LineSearch::Exact {
        bracket_max: 2.0,
        tolerance: 1e-10,
    };
    pub const GRID: LineSearch = LineSearch::Grid { step: 0.01, max: 2.0 };

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ShapeError::InvalidConfig(m));
        match *self {
            LineSearch::Exact { bracket_max, tolerance } => {
                if !(bracket_max > 0.0 && bracket_max.is_finite()) {
                    return bad(format!("bracket_max must be > 0, got {bracket_max}"));
                }
                if !(tolerance > 0.0 && tolerance < bracket_max) {
                    return bad(format!("tolerance must lie in (0, {bracket_max}), got {tolerance}"));
                }
            }
            LineSearch::Grid { step, max } => {
                if !(step > 0.0 && max >= step && max.is_finite()) {
                    return bad(format!("grid needs 0 < step ≤ max, got step {step}, max {max}"));
                }
            }
            LineSearch::Fixed(t) => {
                if !(t > 0.0 && t.is_finite()) {
                    return bad(format!("fixed step must be > 0, got {t}"));
                }
            }
            LineSearch::Unit => {}
        }
        Ok(())
    }
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::GRID
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    pub metric: MetricParams,
    pub max_iterations: usize,
    pub stop_distance: f64,
    pub line_search: LineSearch,
    pub angle_convention: AngleConvention,
    /// Redistribute nodes uniformly in arc length after every step.
    pub resample: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::NewtonMultiplicative,
            metric: MetricParams::L2,
            max_iterations: 50,
            stop_distance: 1e-7,
            line_search: LineSearch::default(),
            angle_convention: AngleConvention::default(),
            resample: false,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(ShapeError::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.stop_distance > 0.0) {
            return Err(ShapeError::InvalidConfig(format!(
                "stop_distance must be > 0, got {}",
                self.stop_distance
            )));
        }
        self.line_search.validate()
    }
}

/// Known optimum used for the distance column.
#[derive(Debug, Clone)]
pub enum Reference {
    /// The level set `x₁² + μ²x₂² = 1`, measured with the polar distance.
    Ellipse { mu: f64 },
    /// An arbitrary curve, measured along normal lines.
    Curve(DiscreteCurve),
}

impl Reference {
    pub fn distance(&self, c: &DiscreteCurve, convention: AngleConvention) -> Result<f64> {
        match self {
            Reference::Ellipse { mu } => distance_bar(c, *mu, convention),
            Reference::Curve(r) => distance_tilde(c, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub objective: f64,
    pub distance: Option<f64>,
    /// Line-search parameter; absent on the final record.
    pub step_scale: Option<f64>,
    /// `‖Δ_k‖` in the metric.
    pub step_norm: f64,
    /// `‖Δ_{k+1}‖ / ‖Δ_k‖`.
    pub contraction_ratio: Option<f64>,
    /// `d_{k+1} / d_k²`.
    pub quadratic_ratio: Option<f64>,
    pub nodes: Vec<[f64; 2]>,
}

/// A failed run together with the records gathered before the failure.
#[derive(Debug, Clone, Error)]
#[error("{error} (after {} iterate(s))", records.len())]
pub struct SolverFailure {
    pub error: ShapeError,
    pub records: Vec<IterationRecord>,
}

/// `f(c)`: the polar rule for the quadratic family, polygon quadrature
/// otherwise.
pub fn objective(c: &DiscreteCurve, f: &VolumeFunctional, convention: AngleConvention) -> Result<f64> {
    match f.family() {
        Family::QuadraticMso { mu } => evaluate_mso(c, mu, convention),
        Family::Custom => Ok(evaluate_general(c, f)),
    }
}

/// `c + t·h·n`.
pub fn retract(c: &DiscreteCurve, geom: &CurveGeometry, h: &NormalField, t: f64) -> Result<DiscreteCurve> {
    if t == 0.0 {
        h.expect_len(c.len())?;
        return Ok(c.clone());
    }
    c.displaced(geom, &h.scaled(t))
}

/// Search direction `Δ` at `c` (a tangent vector, not yet scaled).
pub fn step_direction(
    c: &DiscreteCurve,
    geom: &CurveGeometry,
    f: &VolumeFunctional,
    config: &SolverConfig,
) -> Result<NormalField> {
    let kernel = boundary_kernel(c, geom, f)?;
    let grad = metric::riesz_gradient(geom, config.metric, &kernel.psi)?;
    let step = match config.method {
        Method::SteepestDescent => grad,
        Method::NewtonMultiplicative => {
            let mu = f.mu().ok_or_else(|| {
                ShapeError::InvalidConfig("the multiplicative Hessian needs the quadratic objective".into())
            })?;
            solve_hessian(&hessian_at_solution(c, geom, mu)?, &grad)?
        }
        Method::NewtonGeneralForm => solve_hessian(&assemble_general_form(geom, config.metric, &kernel)?, &grad)?,
    };
    Ok(step.scaled(-1.0))
}

fn is_barrier(e: &ShapeError) -> bool {
    matches!(
        e,
        ShapeError::ShapeDegenerate(_) | ShapeError::NotStarShaped(_) | ShapeError::DegenerateCurve(_)
    )
}

/// `φ(t)`, with `None` where the retracted curve leaves the admissible set.
fn probe(phi: &impl Fn(f64) -> Result<f64>, t: f64) -> Result<Option<f64>> {
    match phi(t) {
        Ok(v) => Ok(Some(v)),
        Err(e) if is_barrier(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Approximate minimiser of `φ(t) = f(retract(c, direction, t))` by
/// bracketing and golden section.
pub fn line_search_exact(phi: impl Fn(f64) -> Result<f64>, bracket_max: f64, tolerance: f64) -> Result<f64> {
    let f0 = phi(0.0)?;
    let mut lo = 0.0;
    let mut mid = 1e-3f64.min(bracket_max);
    let mut f_mid = probe(&phi, mid)?;
    while f_mid.is_none_or(|v| v >= f0) {
        mid *= 0.5;
        if mid < tolerance {
            return Err(ShapeError::LineSearchFailed("no decrease along the direction".into()));
        }
        f_mid = probe(&phi, mid)?;
    }
    let mut f_best = f_mid.unwrap_or(f0);
    let mut hi = mid;
    loop {
        if hi >= bracket_max {
            hi = bracket_max;
            break;
        }
        let next = (2.0 * hi).min(bracket_max);
        match probe(&phi, next)? {
            Some(v) if v < f_best => {
                lo = mid;
                mid = next;
                f_best = v;
                hi = next;
            }
            _ => {
                hi = next;
                break;
            }
        }
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let eval = |t: f64| -> Result<f64> { Ok(probe(&phi, t)?.unwrap_or(f64::INFINITY)) };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > tolerance {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
    }
    let (t, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if v <= f_best {
        Ok(t)
    } else {
        Ok(mid)
    }
}

/// Argmin of `φ` over `t = step, 2·step, …, max`, stopping at the first
/// inadmissible `t`.
pub fn line_search_grid(phi: impl Fn(f64) -> Result<f64>, step: f64, max: f64) -> Result<f64> {
    let f0 = phi(0.0)?;
    let count = (max / step + 1e-9).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..=count {
        let t = k as f64 * step;
        let Some(v) = probe(&phi, t)? else { break };
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((t, v));
        }
    }
    match best {
        Some((t, v)) if v < f0 => Ok(t),
        _ => Err(ShapeError::LineSearchFailed(
            "no grid step decreases the objective".into(),
        )),
    }
}

fn choose_step(
    c: &DiscreteCurve,
    geom: &CurveGeometry,
    f: &VolumeFunctional,
    direction: &NormalField,
    config: &SolverConfig,
) -> Result<f64> {
    let phi = |t: f64| objective(&retract(c, geom, direction, t)?, f, config.angle_convention);
    match config.line_search {
        LineSearch::Exact { bracket_max, tolerance } => line_search_exact(phi, bracket_max, tolerance),
        LineSearch::Grid { step, max } => line_search_grid(phi, step, max),
        LineSearch::Fixed(t) => Ok(t),
        LineSearch::Unit => Ok(1.0),
    }
}

/// Nodes redistributed uniformly in arc length along the polygon, with
/// node 0 kept in place.
pub fn resample_uniform(c: &DiscreteCurve) -> Result<DiscreteCurve> {
    let n = c.len();
    let seg = crate::curve::segment_lengths(c.nodes());
    let total: f64 = seg.iter().sum();
    let mut nodes = Vec::with_capacity(n);
    let mut edge = 0;
    let mut start = 0.0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while edge + 1 < n && start + seg[edge] < s {
            start += seg[edge];
            edge += 1;
        }
        let lambda = ((s - start) / seg[edge]).clamp(0.0, 1.0);
        nodes.push(c.node(edge) + (c.node(edge + 1) - c.node(edge)) * lambda);
    }
    DiscreteCurve::with_params(nodes, equidistant_params(n))
}

fn snapshot(c: &DiscreteCurve) -> Vec<[f64; 2]> {
    c.nodes().iter().map(|p| [p.x, p.y]).collect()
}

/// Rebuilds a curve from a record's node snapshot (equidistant parameters).
pub fn curve_from_record(r: &IterationRecord) -> Result<DiscreteCurve> {
    DiscreteCurve::new(r.nodes.iter().map(|p| Point::new(p[0], p[1])).collect())
}

fn fill_ratios(records: &mut [IterationRecord]) {
    for k in 0..records.len().saturating_sub(1) {
        let (now, next) = (&records[k], &records[k + 1]);
        let contraction = (now.step_norm > 0.0).then(|| next.step_norm / now.step_norm);
        let quadratic = match (now.distance, next.distance) {
            (Some(d0), Some(d1)) if d0 > 0.0 => Some(d1 / (d0 * d0)),
            _ => None,
        };
        records[k].contraction_ratio = contraction;
        records[k].quadratic_ratio = quadratic;
    }
}

/// Runs the iteration from `c0` until the distance to `reference` (or, with
/// no reference, the step norm) drops below `stop_distance`.
pub fn optimize(
    c0: &DiscreteCurve,
    f: &VolumeFunctional,
    config: &SolverConfig,
    reference: Option<&Reference>,
) -> std::result::Result<Vec<IterationRecord>, SolverFailure> {
    let mut records = Vec::new();
    if let Err(error) = config.validate() {
        return Err(SolverFailure { error, records });
    }
    let mut c = c0.clone();
    let result = (|| -> Result<()> {
        for k in 0..=config.max_iterations {
            let geom = c.geometry()?;
            let value = objective(&c, f, config.angle_convention)?;
            if !value.is_finite() {
                return Err(ShapeError::NonFinite(k));
            }
            let distance = reference.map(|r| r.distance(&c, config.angle_convention)).transpose()?;
            let direction = step_direction(&c, &geom, f, config)?;
            let step_norm = metric::norm(&geom, config.metric, &direction)?;
            let converged = match distance {
                Some(d) => d < config.stop_distance,
                None => step_norm < config.stop_distance,
            };
            records.push(IterationRecord {
                index: k,
                objective: value,
                distance,
                step_scale: None,
                step_norm,
                contraction_ratio: None,
                quadratic_ratio: None,
                nodes: snapshot(&c),
            });
            if converged || k == config.max_iterations {
                return Ok(());
            }
            let t = choose_step(&c, &geom, f, &direction, config)?;
            records[k].step_scale = Some(t);
            c = retract(&c, &geom, &direction, t)?;
            if config.resample {
                c = resample_uniform(&c)?;
            }
        }
        Ok(())
    })();
    fill_ratios(&mut records);
    match result {
        Ok(()) => Ok(records),
        Err(error) => Err(SolverFailure { error, records }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    /// Median contraction ratio over the last five steps.
    pub geometric_factor: f64,
    /// Median of `d_{k+1}/d_k²`, when distances are known.
    pub quadratic_coefficient: Option<f64>,
    /// `2·max ‖Δ_{k+1}‖/‖Δ_k‖²`.
    pub omega_estimate: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn convergence_diagnostics(records: &[IterationRecord]) -> Result<ConvergenceSummary> {
    if records.len() < 3 {
        return Err(ShapeError::InsufficientData(format!(
            "need at least 3 records, got {}",
            records.len()
        )));
    }
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.contraction_ratio).collect();
    if ratios.is_empty() {
        return Err(ShapeError::InsufficientData("no contraction ratios recorded".into()));
    }
    let tail = ratios[ratios.len().saturating_sub(5)..].to_vec();
    let quads: Vec<f64> = records.iter().filter_map(|r| r.quadratic_ratio).collect();
    let omega = records
        .windows(2)
        .filter(|w| w[0].step_norm > 0.0)
        .map(|w| w[1].step_norm / (w[0].step_norm * w[0].step_norm))
        .fold(0.0, f64::max);
    Ok(ConvergenceSummary {
        geometric_factor: median(tail),
        quadratic_coefficient: (!quads.is_empty()).then(|| median(quads)),
        omega_estimate: 2.0 * omega,
    })
}
