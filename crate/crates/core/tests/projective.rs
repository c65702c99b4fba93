use approx::assert_relative_eq;
use modelspace::{classify_line, line_through, projective_distance, LineType, ModelSpace, ProjPoint};
use nalgebra::DVector;
use proptest::prelude::*;

fn point(c: &[f64]) -> ProjPoint {
    ProjPoint::from_slice(c).unwrap()
}

fn space(s: &str) -> ModelSpace {
    s.parse().unwrap()
}

#[test]
fn orthogonal_points_of_the_sphere() {
    let d = projective_distance(&space("Ell2"), &point(&[1., 0., 0.]), &point(&[0., 1., 0.])).unwrap();
    assert_relative_eq!(d, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
}

#[test]
fn hyperboloid_geodesic_is_arclength() {
    let hyp = space("Hyp2");
    for t in [0.1f64, 0.7, 2.5] {
        let y = point(&[t.sinh(), 0.0, t.cosh()]);
        let d = projective_distance(&hyp, &point(&[0., 0., 1.]), &y).unwrap();
        assert_relative_eq!(d, t, epsilon = 1e-10);
        assert_eq!(classify_line(&hyp, &line_through(&point(&[0., 0., 1.]), &y).unwrap()), LineType::Hyperbolic);
    }
}

#[test]
fn anti_de_sitter_timelike_pair() {
    // (0, 0, cos t, sin t) runs along a timelike geodesic through e3
    let ads = space("AdS3");
    let t = 0.9f64;
    let d = projective_distance(&ads, &point(&[0., 0., 1., 0.]), &point(&[0., 0., t.cos(), t.sin()])).unwrap();
    assert_relative_eq!(d, t, epsilon = 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_distance_is_angle(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
        let (u, v) = (DVector::from_row_slice(&a), DVector::from_row_slice(&b));
        prop_assume!(u.norm() > 0.1 && v.norm() > 0.1);
        let c = (u.dot(&v) / (u.norm() * v.norm())).abs();
        prop_assume!(c < 1.0 - 1e-6);
        let d = projective_distance(&space("Ell2"), &point(&a), &point(&b)).unwrap();
        prop_assert!((d - c.acos()).abs() < 1e-9);
    }

    #[test]
    fn distance_ignores_representatives(z in prop::array::uniform2(-0.6f64..0.6), w in prop::array::uniform2(-0.6f64..0.6), s in 0.2f64..5.0) {
        let hyp = space("Hyp2");
        let (x, y) = ([z[0], z[1], 1.0], [w[0], w[1], 1.0]);
        prop_assume!((z[0] - w[0]).abs() + (z[1] - w[1]).abs() > 1e-3);
        let d = projective_distance(&hyp, &point(&x), &point(&y)).unwrap();
        let ys = [-s * y[0], -s * y[1], -s * y[2]];
        let e = projective_distance(&hyp, &point(&ys), &point(&x)).unwrap();
        prop_assert!((d - e).abs() < 1e-10 * (1.0 + d));
    }
}
