//! Riemannian shape optimization on discrete closed curves.
//!
//! Curves are represented by their nodes, tangent vectors by scalar normal
//! fields. The metric weights the boundary L² product with curvature, and
//! second-order methods use the Riemannian shape Hessian built from the
//! Levi-Civita connection of that metric.

// `!(x >= lo)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod curve;
pub mod error;
pub mod functional;
pub mod harness;
pub mod metric;
pub mod solver;
pub mod spectral;

pub use curve::{CurveGeometry, DiscreteCurve, GeometryScheme, NormalField, Point};
pub use error::{Result, ShapeError};
pub use functional::{AngleConvention, VolumeFunctional};
pub use metric::MetricParams;
