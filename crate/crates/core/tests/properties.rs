use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapeopt::calculus::riemannian_hessian_form;
use shapeopt::functional::boundary_kernel;
use shapeopt::harness::{random_star_curve, random_trig_field, read_curve_csv, write_curve_csv};
use shapeopt::metric::inner;
use shapeopt::solver::retract;
use shapeopt::{DiscreteCurve, MetricParams, NormalField, Point, VolumeFunctional};

fn setup(seed: u64, n: usize) -> (DiscreteCurve, NormalField, NormalField, NormalField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_star_curve(&mut rng, n).unwrap();
    let h = random_trig_field(&mut rng, &c, 4, 1.0);
    let k = random_trig_field(&mut rng, &c, 4, 1.0);
    let l = random_trig_field(&mut rng, &c, 4, 1.0);
    (c, h, k, l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metric_is_symmetric_and_bilinear(seed in any::<u64>(), a in 0.0..2.0f64, s in -3.0..3.0f64) {
        let (c, h, k, l) = setup(seed, 64);
        let g = c.geometry().unwrap();
        let m = MetricParams::new(a).unwrap();
        let hk = inner(&g, m, &h, &k).unwrap();
        prop_assert!((hk - inner(&g, m, &k, &h).unwrap()).abs() <= 1e-12 * hk.abs().max(1.0));
        let combo = h.zip_with(&l, |x, y| s * x + y);
        let lhs = inner(&g, m, &combo, &k).unwrap();
        let rhs = s * hk + inner(&g, m, &l, &k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        prop_assert!(inner(&g, m, &h, &h).unwrap() > 0.0);
    }

    #[test]
    fn riemannian_hessian_is_symmetric(seed in any::<u64>(), a in 0.0..1.0f64, mu in 1.0..3.0f64) {
        let (c, h, k, _) = setup(seed, 64);
        let g = c.geometry().unwrap();
        let kernel = boundary_kernel(&c, &g, &VolumeFunctional::mso(mu).unwrap()).unwrap();
        let m = MetricParams::new(a).unwrap();
        let hk = riemannian_hessian_form(&g, m, &kernel, &h, &k).unwrap();
        let kh = riemannian_hessian_form(&g, m, &kernel, &k, &h).unwrap();
        prop_assert!((hk - kh).abs() <= 1e-12 * hk.abs().max(1.0), "{hk} vs {kh}");
    }

    #[test]
    fn curve_csv_round_trip(seed in any::<u64>(), n in 8usize..200) {
        let (c, ..) = setup(seed, n);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&c, &path).unwrap();
        prop_assert_eq!(read_curve_csv(&path).unwrap(), c);
    }

    #[test]
    fn constant_retraction_of_a_circle_is_a_circle(r in 0.3..2.0f64, s in -0.2..0.5f64, n in 16usize..256) {
        let c = DiscreteCurve::from_fn(n, |t| Point::new(r * t.cos(), r * t.sin())).unwrap();
        let g = c.geometry().unwrap();
        let moved = retract(&c, &g, &NormalField::constant(n, 1.0), s).unwrap();
        for p in moved.nodes() {
            prop_assert!((p.x.hypot(p.y) - (r + s)).abs() < 1e-12);
        }
    }
}
