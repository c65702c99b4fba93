use modelspace::transition::toy;
use modelspace::{
    conjugate_path_limit, limit_group_membership, rescaled_point_limit, FamilyKind, PointPath, RescalingFamily,
    SpaceName, TargetGroup, Transition,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sources_and_targets() {
    let cases = [
        (SpaceName::Hyp, FamilyKind::BlowUpPoint, TargetGroup::IsomEuc),
        (SpaceName::Ell, FamilyKind::BlowUpPoint, TargetGroup::IsomEuc),
        (SpaceName::AdS, FamilyKind::BlowUpPoint, TargetGroup::IsomMin),
        (SpaceName::DS, FamilyKind::BlowUpPoint, TargetGroup::IsomMin),
        (SpaceName::Ell, FamilyKind::BlowUpHyperplane, TargetGroup::IsomCoEuc),
        (SpaceName::Hyp, FamilyKind::BlowUpHyperplane, TargetGroup::IsomCoMin),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (s, k, t) in cases {
        let tr = Transition::adapted(s, k, 3).unwrap();
        assert_eq!(tr.target, t, "{s:?} {k:?}");
        for _ in 0..10 {
            let (p, _) = tr.random_isometry_path(&mut rng, 0.5);
            let (m, _) = conjugate_path_limit(&p, &tr.family);
            assert!(limit_group_membership(&m, t));
        }
    }
}

#[test]
fn straight_path_rescales_to_its_velocity() {
    // x(t) = e4 + t v blown up at e4 tends to [v, 1]
    let v = DVector::from_vec(vec![0.3, -1.2, 0.5, 0.0]);
    let vv = v.clone();
    let path = PointPath::new(move |t| DVector::from_vec(vec![0., 0., 0., 1.]) + &vv * t);
    let p = rescaled_point_limit(&path, &RescalingFamily::point(4)).unwrap();
    let want = DVector::from_vec(vec![0.3, -1.2, 0.5, 1.0]);
    let r = p.rep() / p.rep()[3];
    assert!((r - want).amax() < 1e-6);
}

#[test]
fn toy_rotation_limit() {
    for a in [-1.5, 0.25, 4.0] {
        let (m, _) = toy::limit(toy::LineKind::Elliptic, -a);
        assert!((m - toy::translation(a)).amax() < 1e-6);
    }
}
