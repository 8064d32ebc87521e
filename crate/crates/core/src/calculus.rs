//! Shape calculus on the discrete curve manifold: the Levi-Civita
//! connection of `G^A` expressed through shape derivatives, the standard and
//! Riemannian shape Hessians of volume functionals, Hessian solves, and a
//! Taylor-remainder probe.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::{tangential_second_derivative, CurveGeometry, DiscreteCurve, GeometryScheme, NormalField};
use crate::error::{Result, ShapeError};
use crate::functional::{boundary_kernel, evaluate_general, evaluate_spectral, BoundaryKernel, VolumeFunctional};
use crate::metric::{self, MetricParams};

/// `½(κ + 2Aκ³/(1 + Aκ²))`, the zeroth-order connection coefficient.
fn connection_coefficient(metric: MetricParams, kappa: f64) -> f64 {
    let a = metric.a();
    0.5 * (kappa + 2.0 * a * kappa.powi(3) / metric.density(kappa))
}

fn product(alpha: &NormalField, beta: &NormalField) -> NormalField {
    alpha.zip_with(beta, |a, b| a * b)
}

/// `∇_h k` for `h = αn`, `k = βn`:
/// `(∂β/∂n)α + ½(κ + 2Aκ³/(1+Aκ²))αβ + Aκ(αβ)_ττ`.
///
/// `dbeta_dn` is the normal derivative of whatever extension of `β` the
/// caller has in mind.
pub fn covariant_derivative(
    geom: &CurveGeometry,
    metric: MetricParams,
    alpha: &NormalField,
    beta: &NormalField,
    dbeta_dn: &NormalField,
) -> Result<NormalField> {
    let n = geom.len();
    alpha.expect_len(n)?;
    beta.expect_len(n)?;
    dbeta_dn.expect_len(n)?;
    let ab = product(alpha, beta);
    let ab_tt = tangential_second_derivative(geom, &ab)?;
    let a = metric.a();
    NormalField::new(
        (0..n)
            .map(|i| {
                let k = geom.curvature[i];
                dbeta_dn[i] * alpha[i] + connection_coefficient(metric, k) * ab[i] + a * k * ab_tt[i]
            })
            .collect(),
    )
}

/// Repeated shape derivative `d(df[W])[V]` of a volume functional, with
/// `α = ⟨V,n⟩`, `β = ⟨W,n⟩` and `dw_normal = ⟨DW·V, n⟩` supplied per node.
///
/// Not symmetric in general: the last term depends on how `W` is extended.
pub fn standard_shape_hessian_form(
    geom: &CurveGeometry,
    kernel: &BoundaryKernel,
    alpha: &NormalField,
    beta: &NormalField,
    dw_normal: &NormalField,
) -> Result<f64> {
    let n = geom.len();
    for f in [&kernel.psi, &kernel.dpsi_dn, alpha, beta, dw_normal] {
        f.expect_len(n)?;
    }
    Ok((0..n)
        .map(|i| {
            let psi = kernel.psi[i];
            let k = geom.curvature[i];
            ((kernel.dpsi_dn[i] + k * psi) * (beta[i] * alpha[i]) + psi * dw_normal[i]) * geom.weights[i]
        })
        .sum())
}

/// `G^A(Hess f[V], W)` for a volume functional:
/// `∫ (∂ψ/∂n + κψ/2 − Aκ³ψ/(1+Aκ²)) αβ − ψAκ(αβ)_ττ ds`.
///
/// Depends on the fields only through `αβ`, so it is symmetric exactly.
pub fn riemannian_hessian_form(
    geom: &CurveGeometry,
    metric: MetricParams,
    kernel: &BoundaryKernel,
    alpha: &NormalField,
    beta: &NormalField,
) -> Result<f64> {
    let n = geom.len();
    for f in [&kernel.psi, &kernel.dpsi_dn, alpha, beta] {
        f.expect_len(n)?;
    }
    let ab = product(alpha, beta);
    let a = metric.a();
    let ab_tt = if a != 0.0 {
        Some(tangential_second_derivative(geom, &ab)?)
    } else {
        None
    };
    Ok((0..n)
        .map(|i| {
            let psi = kernel.psi[i];
            let k = geom.curvature[i];
            let factor = kernel.dpsi_dn[i] + 0.5 * k * psi - a * k.powi(3) * psi / metric.density(k);
            let mut term = factor * ab[i];
            if let Some(tt) = &ab_tt {
                term -= psi * a * k * tt[i];
            }
            term * geom.weights[i]
        })
        .sum())
}

/// Nodal matrix of the Riemannian Hessian form.
#[derive(Debug, Clone)]
pub struct GeneralForm {
    /// Symmetrised `M_ij = form(e_i, e_j)`.
    pub matrix: DMatrix<f64>,
    /// `G^A` mass `(1 + Aκ_i²) w_i`.
    pub mass: Vec<f64>,
    /// `max |M_ij − M_ji| / max |M_ij|` before symmetrisation.
    pub raw_asymmetry: f64,
}

/// A Hessian as an operator on normal fields.
#[derive(Debug, Clone)]
pub enum HessianOperator {
    /// `Hess·V = ν·V` pointwise.
    Multiplication(NormalField),
    GeneralForm(GeneralForm),
}

impl HessianOperator {
    /// Applies the operator as a map on tangent vectors (`G^A`-representation).
    pub fn apply(&self, v: &NormalField) -> Result<NormalField> {
        match self {
            HessianOperator::Multiplication(nu) => {
                v.expect_len(nu.len())?;
                Ok(nu.zip_with(v, |a, b| a * b))
            }
            HessianOperator::GeneralForm(gf) => {
                v.expect_len(gf.mass.len())?;
                let x = DVector::from_column_slice(v.values());
                let y = &gf.matrix * x;
                NormalField::new(y.iter().zip(&gf.mass).map(|(a, m)| a / m).collect())
            }
        }
    }
}

/// Multiplication operator `ν = 2(x₁n₁ + μ²x₂n₂)` evaluated along `c` with
/// its own normals; exact Hessian of the quadratic objective at its optimum.
pub fn hessian_at_solution(c: &DiscreteCurve, geom: &CurveGeometry, mu: f64) -> Result<HessianOperator> {
    if geom.len() != c.len() {
        return Err(ShapeError::DimensionMismatch {
            expected: c.len(),
            found: geom.len(),
        });
    }
    let mu2 = mu * mu;
    let nu = c
        .nodes()
        .iter()
        .zip(&geom.normal)
        .map(|(p, n)| 2.0 * (p.x * n.x + mu2 * p.y * n.y))
        .collect();
    Ok(HessianOperator::Multiplication(NormalField::new(nu)?))
}

/// Assembles the Riemannian Hessian form against nodal indicator fields.
pub fn assemble_general_form(
    geom: &CurveGeometry,
    metric: MetricParams,
    kernel: &BoundaryKernel,
) -> Result<HessianOperator> {
    let n = geom.len();
    let basis = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        NormalField::new(v).expect("finite basis")
    };
    let mut raw = DMatrix::zeros(n, n);
    for i in 0..n {
        let ei = basis(i);
        for j in 0..n {
            raw[(i, j)] = riemannian_hessian_form(geom, metric, kernel, &ei, &basis(j))?;
        }
    }
    let scale = raw.amax().max(f64::MIN_POSITIVE);
    let raw_asymmetry = (&raw - raw.transpose()).amax() / scale;
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(HessianOperator::GeneralForm(GeneralForm {
        matrix,
        mass: metric::mass(geom, metric),
        raw_asymmetry,
    }))
}

/// Solves `Hess·Δ = rhs` for `Δ`, with `rhs` a tangent vector.
pub fn solve_hessian(h: &HessianOperator, rhs: &NormalField) -> Result<NormalField> {
    match h {
        HessianOperator::Multiplication(nu) => {
            rhs.expect_len(nu.len())?;
            if let Some(i) = nu.values().iter().position(|v| !(v.abs() > 1e-12)) {
                return Err(ShapeError::SingularHessian(format!("ν vanishes at node {i}")));
            }
            NormalField::new(rhs.values().iter().zip(nu.values()).map(|(r, v)| r / v).collect())
        }
        HessianOperator::GeneralForm(gf) => {
            rhs.expect_len(gf.mass.len())?;
            let b = DVector::from_iterator(gf.mass.len(), rhs.values().iter().zip(&gf.mass).map(|(r, m)| r * m));
            let lu = gf.matrix.clone().lu();
            let x = lu
                .solve(&b)
                .ok_or_else(|| ShapeError::SingularHessian("assembled matrix is singular".into()))?;
            NormalField::new(x.iter().copied().collect())
                .map_err(|_| ShapeError::SingularHessian("solution is not finite".into()))
        }
    }
}

/// Curve along which the Taylor expansion is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaylorPath {
    /// `c + tαn`.
    Retraction,
    /// `c + (tα − ½t²∇_h h)n`: the retraction with its covariant
    /// acceleration removed, so it agrees with the geodesic to second order.
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorSample {
    pub t: f64,
    pub remainder: f64,
}

/// Remainder of the quadratic model
/// `f(c) + t·G(grad f, h) + ½t²·Hess f(h, h)` along `path`.
///
/// The objective is integrated exactly over the polygon for central
/// differences and spectrally for spectral geometry.
pub fn taylor_remainder_probe(
    f: &VolumeFunctional,
    c: &DiscreteCurve,
    metric: MetricParams,
    h: &NormalField,
    ts: &[f64],
    path: TaylorPath,
    scheme: GeometryScheme,
) -> Result<Vec<TaylorSample>> {
    let geom = CurveGeometry::build_with(c, scheme)?;
    h.expect_len(c.len())?;
    let kernel = boundary_kernel(c, &geom, f)?;
    let grad = metric::riesz_gradient(&geom, metric, &kernel.psi)?;
    let slope = metric::inner(&geom, metric, &grad, h)?;
    let curvature_term = riemannian_hessian_form(&geom, metric, &kernel, h, h)?;
    let acceleration = match path {
        TaylorPath::Retraction => NormalField::zeros(c.len()),
        TaylorPath::SecondOrder => covariant_derivative(&geom, metric, h, h, &NormalField::zeros(c.len()))?,
    };
    let objective = |curve: &DiscreteCurve| -> Result<f64> {
        match scheme {
            GeometryScheme::CentralDifference => Ok(evaluate_general(curve, f)),
            GeometryScheme::Spectral => evaluate_spectral(curve, f),
        }
    };
    let f0 = objective(c)?;

    ts.iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(TaylorSample { t, remainder: 0.0 });
            }
            let offsets = h.zip_with(&acceleration, |a, acc| t * a - 0.5 * t * t * acc);
            let moved = c.displaced(&geom, &offsets)?;
            let model = f0 + t * slope + 0.5 * t * t * curvature_term;
            Ok(TaylorSample {
                t,
                remainder: (objective(&moved)? - model).abs(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln remainder` against `ln t` (samples with
/// `t = 0` are skipped).
pub fn loglog_slope(samples: &[TaylorSample]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| (s.t.ln(), s.remainder.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Point;
    use std::f64::consts::PI;

    fn circle(n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, |t| Point::new(t.cos(), t.sin())).unwrap()
    }

    fn ellipse(n: usize, mu: f64) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, |t| Point::new(t.cos(), t.sin() / mu)).unwrap()
    }

    #[test]
    fn covariant_derivative_on_circle() {
        let c = circle(100);
        let g = c.geometry().unwrap();
        let one = NormalField::constant(100, 1.0);
        let zero = NormalField::zeros(100);
        let d0 = covariant_derivative(&g, MetricParams::L2, &one, &one, &zero).unwrap();
        assert!(d0.values().iter().all(|v| (v - 0.5).abs() < 1e-3));
        let d1 = covariant_derivative(&g, MetricParams::new(1.0).unwrap(), &one, &one, &zero).unwrap();
        for (i, v) in d1.values().iter().enumerate() {
            let k = g.curvature[i];
            assert!((v - (0.5 * k + k.powi(3) / (1.0 + k * k))).abs() < 1e-12);
            assert!((v - 1.0).abs() < 5e-3);
        }
        let dz = covariant_derivative(&g, MetricParams::new(0.7).unwrap(), &one, &zero, &zero).unwrap();
        assert_eq!(dz.max_abs(), 0.0);
    }

    #[test]
    fn torsion_is_the_lie_bracket() {
        // ∇_h k − ∇_k h = (∂β/∂n)α − (∂α/∂n)β for any extension data.
        let c = ellipse(60, 1.5);
        let g = c.geometry().unwrap();
        let m = MetricParams::new(0.4).unwrap();
        let a = NormalField::from_params(&c, |t| 1.0 + 0.3 * t.sin());
        let b = NormalField::from_params(&c, |t| (2.0 * t).cos());
        let da = NormalField::from_params(&c, |t| 0.2 * t.cos());
        let db = NormalField::from_params(&c, |t| -0.7 + t.sin());
        let hk = covariant_derivative(&g, m, &a, &b, &db).unwrap();
        let kh = covariant_derivative(&g, m, &b, &a, &da).unwrap();
        for i in 0..60 {
            let bracket = db[i] * a[i] - da[i] * b[i];
            assert!((hk[i] - kh[i] - bracket).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_form_zero_integrand() {
        let c = circle(40);
        let g = c.geometry().unwrap();
        let k = BoundaryKernel {
            psi: NormalField::zeros(40),
            dpsi_dn: NormalField::zeros(40),
        };
        let a = NormalField::from_params(&c, |t| t.sin());
        let v = standard_shape_hessian_form(&g, &k, &a, &a, &NormalField::constant(40, 3.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn standard_form_is_asymmetric_off_the_optimum() {
        // μ = 2 on the unit circle: ψ = 3x₂² ≠ 0, so the extension term
        // survives. W = βn extended with ⟨DW·V, n⟩ = α·∂β/∂n; take different
        // normal derivatives for the two extensions.
        let c = circle(100);
        let g = c.geometry().unwrap();
        let k = boundary_kernel(&c, &g, &VolumeFunctional::mso(2.0).unwrap()).unwrap();
        let a = NormalField::from_params(&c, |t| 1.0 + 0.5 * t.cos());
        let b = NormalField::from_params(&c, |t| (2.0 * t).sin());
        let da_dn = NormalField::from_params(&c, |t| t.sin());
        let db_dn = NormalField::from_params(&c, |t| 0.3 + t.cos());
        let dw_v = a.zip_with(&db_dn, |x, y| x * y);
        let dv_w = b.zip_with(&da_dn, |x, y| x * y);
        let ab = standard_shape_hessian_form(&g, &k, &a, &b, &dw_v).unwrap();
        let ba = standard_shape_hessian_form(&g, &k, &b, &a, &dv_w).unwrap();
        assert!((ab - ba).abs() > 1e-2, "{ab} vs {ba}");

        // Subtracting df[∇_V W] repairs it (Riemannian form is symmetric).
        let m = MetricParams::L2;
        let cov_ab = covariant_derivative(&g, m, &a, &b, &db_dn).unwrap();
        let cov_ba = covariant_derivative(&g, m, &b, &a, &da_dn).unwrap();
        let r_ab = ab - metric::shape_derivative(&g, &k.psi, &cov_ab).unwrap();
        let r_ba = ba - metric::shape_derivative(&g, &k.psi, &cov_ba).unwrap();
        assert!((r_ab - r_ba).abs() < 1e-12);
        let direct = riemannian_hessian_form(&g, m, &k, &a, &b).unwrap();
        assert!((r_ab - direct).abs() < 1e-12);
    }

    #[test]
    fn riemannian_form_equals_standard_minus_connection_with_curvature_weight() {
        let c = DiscreteCurve::from_fn(80, |t| {
            let r = 0.8 + 0.1 * (3.0 * t).cos();
            Point::new(r * t.cos(), r * t.sin())
        })
        .unwrap();
        let g = c.geometry().unwrap();
        let m = MetricParams::new(0.6).unwrap();
        let k = boundary_kernel(&c, &g, &VolumeFunctional::mso(2.0).unwrap()).unwrap();
        let a = NormalField::from_params(&c, |t| t.cos());
        let b = NormalField::from_params(&c, |t| 1.0 + (2.0 * t).sin());
        let db = NormalField::from_params(&c, |t| (5.0 * t).cos());
        let dw = a.zip_with(&db, |x, y| x * y);
        let std = standard_shape_hessian_form(&g, &k, &a, &b, &dw).unwrap();
        let cov = covariant_derivative(&g, m, &a, &b, &db).unwrap();
        let lhs = std - metric::shape_derivative(&g, &k.psi, &cov).unwrap();
        let rhs = riemannian_hessian_form(&g, m, &k, &a, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn riemannian_form_on_circle_mu1() {
        let c = circle(64);
        let g = c.geometry().unwrap();
        let k = boundary_kernel(&c, &g, &VolumeFunctional::mso(1.0).unwrap()).unwrap();
        let a = NormalField::from_params(&c, |t| t.sin() + 0.2);
        let b = NormalField::from_params(&c, |t| (3.0 * t).cos());
        for m in [0.0, 0.5, 2.0] {
            let m = MetricParams::new(m).unwrap();
            let v = riemannian_hessian_form(&g, m, &k, &a, &b).unwrap();
            let expected: f64 = (0..64).map(|i| 2.0 * a[i] * b[i] * g.weights[i]).sum();
            assert!((v - expected).abs() < 1e-12);
        }
        assert_eq!(
            riemannian_hessian_form(&g, MetricParams::L2, &k, &NormalField::zeros(64), &b).unwrap(),
            0.0
        );
    }

    #[test]
    fn multiplication_operator_at_optimum() {
        let c = ellipse(100, 2.0);
        let g = c.geometry().unwrap();
        let HessianOperator::Multiplication(nu) = hessian_at_solution(&c, &g, 2.0).unwrap() else {
            panic!("expected multiplication operator");
        };
        assert!((nu[0] - 2.0).abs() < 1e-12);
        assert!((nu[25] - 4.0).abs() < 1e-12);
        let lo = nu.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = nu.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 2.0).abs() < 1e-3 && (hi - 4.0).abs() < 1e-3);

        let cc = circle(50);
        let gc = cc.geometry().unwrap();
        let HessianOperator::Multiplication(nu) = hessian_at_solution(&cc, &gc, 1.0).unwrap() else {
            unreachable!()
        };
        assert!(nu.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn multiplication_solve() {
        let h = HessianOperator::Multiplication(NormalField::constant(10, 2.0));
        let d = solve_hessian(&h, &NormalField::constant(10, 1.0)).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.5));

        let mut nu = vec![1.0; 10];
        nu[3] = 0.0;
        let h = HessianOperator::Multiplication(NormalField::new(nu).unwrap());
        assert!(matches!(
            solve_hessian(&h, &NormalField::constant(10, 1.0)),
            Err(ShapeError::SingularHessian(_))
        ));
    }

    #[test]
    fn general_form_solve_inverts_apply() {
        let c = DiscreteCurve::from_fn(40, |t| Point::new(0.9 * t.cos(), 0.6 * t.sin())).unwrap();
        let g = c.geometry().unwrap();
        let m = MetricParams::new(0.3).unwrap();
        let k = boundary_kernel(&c, &g, &VolumeFunctional::mso(2.0).unwrap()).unwrap();
        let h = assemble_general_form(&g, m, &k).unwrap();
        let HessianOperator::GeneralForm(gf) = &h else {
            unreachable!()
        };
        assert!(gf.raw_asymmetry < 1e-12);
        let rhs = NormalField::from_params(&c, |t| (2.0 * t).sin() + 0.1);
        let x = solve_hessian(&h, &rhs).unwrap();
        let back = h.apply(&x).unwrap();
        for i in 0..40 {
            assert!((back[i] - rhs[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn taylor_zero_step() {
        let c = circle(32);
        let f = VolumeFunctional::area();
        let h = NormalField::constant(32, 0.1);
        let s = taylor_remainder_probe(
            &f,
            &c,
            MetricParams::L2,
            &h,
            &[0.0],
            TaylorPath::Retraction,
            GeometryScheme::CentralDifference,
        )
        .unwrap();
        assert_eq!(s[0].remainder, 0.0);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let s: Vec<TaylorSample> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&t| TaylorSample {
                t,
                remainder: 7.0 * t * t * t,
            })
            .collect();
        assert!((loglog_slope(&s) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn area_functional_taylor_on_circle() {
        // ψ ≡ 1 on a circle, spectral geometry, geodesic-corrected path.
        let c = DiscreteCurve::from_fn(64, |t| Point::new(t.cos(), t.sin())).unwrap();
        let h = NormalField::from_params(&c, |t| 0.1 * (0.5 + t.cos() + 0.3 * (2.0 * t).sin()) / 1.8);
        let s = taylor_remainder_probe(
            &VolumeFunctional::area(),
            &c,
            MetricParams::L2,
            &h,
            &[0.04, 0.02, 0.01],
            TaylorPath::SecondOrder,
            GeometryScheme::Spectral,
        )
        .unwrap();
        let slope = loglog_slope(&s);
        assert!(slope >= 2.5, "slope {slope}");
        let _ = PI;
    }
}
