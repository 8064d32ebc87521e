//! The curvature-weighted metric family on normal fields,
//! `G^A(h, k) = ∫ (1 + Aκ²) α β ds`, discretised with the node weights.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveGeometry, NormalField};
use crate::error::{Result, ShapeError};

/// Weight `A ≥ 0` of the curvature term. `A = 0` is the plain boundary
/// L² product.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricParams {
    a: f64,
}

impl MetricParams {
    pub fn new(a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(ShapeError::InvalidParams(format!("metric weight must be ≥ 0, got {a}")));
        }
        Ok(Self { a })
    }

    pub const L2: MetricParams = MetricParams { a: 0.0 };

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `1 + Aκ²`.
    pub fn density(&self, kappa: f64) -> f64 {
        1.0 + self.a * kappa * kappa
    }
}

/// Per-node mass `(1 + Aκ_i²) w_i`.
pub fn mass(geom: &CurveGeometry, metric: MetricParams) -> Vec<f64> {
    geom.curvature
        .iter()
        .zip(&geom.weights)
        .map(|(&k, &w)| metric.density(k) * w)
        .collect()
}

pub fn inner(geom: &CurveGeometry, metric: MetricParams, h: &NormalField, k: &NormalField) -> Result<f64> {
    let n = geom.len();
    h.expect_len(n)?;
    k.expect_len(n)?;
    // α_i β_i is formed first so swapping the arguments gives the same bits.
    Ok((0..n)
        .map(|i| metric.density(geom.curvature[i]) * (h[i] * k[i]) * geom.weights[i])
        .sum())
}

pub fn norm(geom: &CurveGeometry, metric: MetricParams, h: &NormalField) -> Result<f64> {
    Ok(inner(geom, metric, h, h)?.max(0.0).sqrt())
}

/// Riesz representative of the shape derivative with boundary kernel `g`:
/// `grad_i = g_i / (1 + Aκ_i²)`.
pub fn riesz_gradient(geom: &CurveGeometry, metric: MetricParams, g: &NormalField) -> Result<NormalField> {
    g.expect_len(geom.len())?;
    NormalField::new(
        g.values()
            .iter()
            .zip(&geom.curvature)
            .map(|(&gi, &k)| gi / metric.density(k))
            .collect(),
    )
}

/// `Σ g_i α_i w_i`, the quadrature of the shape derivative `∫ g α ds`.
pub fn shape_derivative(geom: &CurveGeometry, g: &NormalField, h: &NormalField) -> Result<f64> {
    let n = geom.len();
    g.expect_len(n)?;
    h.expect_len(n)?;
    Ok((0..n).map(|i| g[i] * h[i] * geom.weights[i]).sum())
}
