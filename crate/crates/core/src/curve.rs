//! Closed planar polygons standing in for smooth boundary curves, and the
//! local geometry (tangent, outward normal, curvature, length weights) the
//! shape calculus is evaluated with.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::spectral;

pub type Point = Vector2<f64>;

/// Smallest node count for which the difference stencils make sense.
pub const MIN_NODES: usize = 8;

/// Periodic polygon with counterclockwise orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    nodes: Vec<Point>,
    params: Vec<f64>,
}

impl DiscreteCurve {
    /// Builds a curve with equidistant parameters `2πi/N`. Clockwise input is
    /// reversed so that normals computed from it point outward.
    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        let n = nodes.len();
        Self::with_params(nodes, equidistant_params(n))
    }

    pub fn with_params(nodes: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        let mut curve = Self::validated(nodes, params)?;
        if signed_area(&curve.nodes) < 0.0 {
            curve = curve.reversed();
        }
        if !polygon_is_simple(&curve.nodes) {
            return Err(ShapeError::DegenerateCurve("polygon self-intersects".into()));
        }
        Ok(curve)
    }

    /// Samples `f` at `N` equidistant parameters.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let params = equidistant_params(n);
        let nodes = params.iter().map(|&t| f(t)).collect();
        Self::with_params(nodes, params)
    }

    /// Like [`DiscreteCurve::with_params`] but refuses clockwise or
    /// self-intersecting input instead of repairing it.
    pub(crate) fn oriented(nodes: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        let curve = Self::validated(nodes, params).map_err(|e| ShapeError::ShapeDegenerate(e.to_string()))?;
        if signed_area(&curve.nodes) <= 0.0 {
            return Err(ShapeError::ShapeDegenerate("orientation reversed".into()));
        }
        if !polygon_is_simple(&curve.nodes) {
            return Err(ShapeError::ShapeDegenerate("polygon self-intersects".into()));
        }
        Ok(curve)
    }

    fn validated(nodes: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < MIN_NODES {
            return Err(ShapeError::TooFewNodes {
                min: MIN_NODES,
                found: n,
            });
        }
        if params.len() != n {
            return Err(ShapeError::DimensionMismatch {
                expected: n,
                found: params.len(),
            });
        }
        if let Some(i) = nodes.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(ShapeError::NonFinite(i));
        }
        if params.windows(2).any(|w| w[1] <= w[0]) || params[n - 1] - params[0] >= 2.0 * PI {
            return Err(ShapeError::InvalidParams(
                "parameters must increase strictly and span less than 2π".into(),
            ));
        }
        for i in 0..n {
            if nodes[i] == nodes[(i + 1) % n] {
                return Err(ShapeError::DegenerateCurve(format!(
                    "nodes {} and {} coincide",
                    i,
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { nodes, params })
    }

    fn reversed(&self) -> Self {
        let n = self.len();
        let mut nodes = Vec::with_capacity(n);
        let mut params = Vec::with_capacity(n);
        nodes.push(self.nodes[0]);
        params.push(self.params[0]);
        // Walk backwards, reusing the parameter gaps in reverse order.
        for k in 1..n {
            let j = n - k;
            let gap = self.param_gap(j);
            nodes.push(self.nodes[j]);
            params.push(params[k - 1] + gap);
        }
        Self { nodes, params }
    }

    /// Parameter distance from node `i` to node `i + 1` (periodic).
    fn param_gap(&self, i: usize) -> f64 {
        let n = self.len();
        if i + 1 < n {
            self.params[i + 1] - self.params[i]
        } else {
            self.params[0] + 2.0 * PI - self.params[n - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i % self.len()]
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.nodes)
    }

    pub fn perimeter(&self) -> f64 {
        segment_lengths(&self.nodes).iter().sum()
    }

    pub fn check_simple(&self) -> bool {
        polygon_is_simple(&self.nodes)
    }

    pub fn has_equidistant_params(&self) -> bool {
        let h = 2.0 * PI / self.len() as f64;
        (0..self.len()).all(|i| (self.param_gap(i) - h).abs() < 1e-12)
    }

    pub fn geometry(&self) -> Result<CurveGeometry> {
        CurveGeometry::build(self)
    }

    /// Moves node `i` by `offsets[i]·n_i`, keeping the parameters.
    ///
    /// Fails with `ShapeDegenerate` if the result self-intersects, turns
    /// clockwise, or folds back on itself (an edge reverses direction).
    pub fn displaced(&self, geom: &CurveGeometry, offsets: &NormalField) -> Result<DiscreteCurve> {
        let n = self.len();
        if geom.len() != n {
            return Err(ShapeError::DimensionMismatch {
                expected: n,
                found: geom.len(),
            });
        }
        offsets.expect_len(n)?;
        let nodes: Vec<Point> = (0..n).map(|i| self.nodes[i] + geom.normal[i] * offsets[i]).collect();
        for i in 0..n {
            let old = self.nodes[(i + 1) % n] - self.nodes[i];
            let new = nodes[(i + 1) % n] - nodes[i];
            if old.dot(&new) <= 0.0 {
                return Err(ShapeError::ShapeDegenerate(format!("edge {i} folded over")));
            }
        }
        Self::oriented(nodes, self.params.clone())
    }
}

pub fn equidistant_params(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Shoelace area; positive for counterclockwise polygons.
pub fn signed_area(nodes: &[Point]) -> f64 {
    let n = nodes.len();
    0.5 * (0..n)
        .map(|i| {
            let p = nodes[i];
            let q = nodes[(i + 1) % n];
            p.x * q.y - p.y * q.x
        })
        .sum::<f64>()
}

/// `l[i] = |p[i+1] - p[i]|`, periodic.
pub fn segment_lengths(nodes: &[Point]) -> Vec<f64> {
    let n = nodes.len();
    (0..n).map(|i| (nodes[(i + 1) % n] - nodes[i]).norm()).collect()
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True iff no two non-adjacent edges of the closed polygon meet.
pub fn polygon_is_simple(nodes: &[Point]) -> bool {
    let n = nodes.len();
    if n < 3 {
        return false;
    }
    let boxes: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let a = nodes[i];
            let b = nodes[(i + 1) % n];
            [a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y)]
        })
        .collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                continue;
            }
            if segments_intersect(nodes[i], nodes[(i + 1) % n], nodes[j], nodes[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// How derivatives along the curve are approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GeometryScheme {
    /// Three-point periodic differences in the parameter; curve quantities
    /// are second-order accurate.
    #[default]
    CentralDifference,
    /// Trigonometric interpolation of the nodes. Requires equidistant
    /// parameters; spectrally accurate for smooth curves.
    Spectral,
}

/// Per-node geometry of a [`DiscreteCurve`].
#[derive(Debug, Clone)]
pub struct CurveGeometry {
    pub scheme: GeometryScheme,
    pub tangent: Vec<Point>,
    pub normal: Vec<Point>,
    pub curvature: Vec<f64>,
    /// Length-measure quadrature weights.
    pub weights: Vec<f64>,
    /// `|c'(θ)|` at each node.
    pub speed: Vec<f64>,
    /// `l[i] = |c[i+1] - c[i]|`.
    pub segment_lengths: Vec<f64>,
}

impl CurveGeometry {
    pub fn build(c: &DiscreteCurve) -> Result<Self> {
        Self::build_with(c, GeometryScheme::CentralDifference)
    }

    pub fn build_with(c: &DiscreteCurve, scheme: GeometryScheme) -> Result<Self> {
        let n = c.len();
        let seg = segment_lengths(c.nodes());
        if let Some(i) = seg.iter().position(|&l| l == 0.0) {
            return Err(ShapeError::DegenerateCurve(format!("zero-length segment at node {i}")));
        }

        let (d1, d2, weights) = match scheme {
            GeometryScheme::CentralDifference => {
                let mut d1 = Vec::with_capacity(n);
                let mut d2 = Vec::with_capacity(n);
                for i in 0..n {
                    let hm = c.param_gap((i + n - 1) % n);
                    let hp = c.param_gap(i);
                    let pm = c.node(i + n - 1);
                    let p = c.node(i);
                    let pp = c.node(i + 1);
                    d1.push(pm * (-hp / (hm * (hm + hp))) + p * ((hp - hm) / (hm * hp)) + pp * (hm / (hp * (hm + hp))));
                    d2.push((pm / (hm * (hm + hp)) - p / (hm * hp) + pp / (hp * (hm + hp))) * 2.0);
                }
                let weights = (0..n).map(|i| 0.5 * (seg[i] + seg[(i + n - 1) % n])).collect();
                (d1, d2, weights)
            }
            GeometryScheme::Spectral => {
                if !c.has_equidistant_params() {
                    return Err(ShapeError::InvalidParams(
                        "spectral geometry needs equidistant parameters".into(),
                    ));
                }
                let xs: Vec<f64> = c.nodes().iter().map(|p| p.x).collect();
                let ys: Vec<f64> = c.nodes().iter().map(|p| p.y).collect();
                let (x1, y1) = (spectral::derivative(&xs, 1), spectral::derivative(&ys, 1));
                let (x2, y2) = (spectral::derivative(&xs, 2), spectral::derivative(&ys, 2));
                let d1: Vec<Point> = (0..n).map(|i| Point::new(x1[i], y1[i])).collect();
                let d2 = (0..n).map(|i| Point::new(x2[i], y2[i])).collect();
                let h = 2.0 * PI / n as f64;
                let weights = d1.iter().map(|d| d.norm() * h).collect();
                (d1, d2, weights)
            }
        };

        let mut tangent = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        let mut speed = Vec::with_capacity(n);
        for i in 0..n {
            let s = d1[i].norm();
            if !(s > 0.0) || !s.is_finite() {
                return Err(ShapeError::DegenerateCurve(format!("zero tangent at node {i}")));
            }
            let t = d1[i] / s;
            tangent.push(t);
            normal.push(Point::new(t.y, -t.x));
            curvature.push(cross(d1[i], d2[i]) / (s * s * s));
            speed.push(s);
        }

        Ok(Self {
            scheme,
            tangent,
            normal,
            curvature,
            weights,
            speed,
            segment_lengths: seg,
        })
    }

    pub fn len(&self) -> usize {
        self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normal.is_empty()
    }
}

/// Scalar value per node: the tangent vector `α·n` at a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalField(Vec<f64>);

impl NormalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ShapeError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Field from a function of the node position.
    pub fn from_nodes(c: &DiscreteCurve, f: impl Fn(Point) -> f64) -> Self {
        Self(c.nodes().iter().map(|&p| f(p)).collect())
    }

    /// Field from a function of the node parameter.
    pub fn from_params(c: &DiscreteCurve, f: impl Fn(f64) -> f64) -> Self {
        Self(c.params().iter().map(|&t| f(t)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(ShapeError::DimensionMismatch {
                expected: n,
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for NormalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Second derivative of `u` with respect to arc length.
///
/// Central-difference geometry uses the three-point stencil for unequal
/// spacing with the chord lengths to the neighbours; spectral geometry
/// differentiates `u` trigonometrically and divides by the speed twice.
pub fn tangential_second_derivative(geom: &CurveGeometry, u: &NormalField) -> Result<NormalField> {
    let n = geom.len();
    u.expect_len(n)?;
    let v = u.values();
    let out = match geom.scheme {
        GeometryScheme::CentralDifference => (0..n)
            .map(|i| {
                let dm = geom.segment_lengths[(i + n - 1) % n];
                let dp = geom.segment_lengths[i];
                2.0 * (v[(i + n - 1) % n] / (dm * (dm + dp)) - v[i] / (dm * dp) + v[(i + 1) % n] / (dp * (dm + dp)))
            })
            .collect(),
        GeometryScheme::Spectral => {
            let du = spectral::derivative(v, 1);
            let du_ds: Vec<f64> = du.iter().zip(&geom.speed).map(|(d, s)| d / s).collect();
            spectral::derivative(&du_ds, 1)
                .iter()
                .zip(&geom.speed)
                .map(|(d, s)| d / s)
                .collect()
        }
    };
    Ok(NormalField(out))
}
