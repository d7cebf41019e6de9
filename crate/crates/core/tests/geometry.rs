use manifold_prox::linalg::Mat;
use manifold_prox::manifold::{
    distance, exp_map, grad_half_dist_sq, inner, log_map, parallel_transport, random_point, random_tangent, SYM_TOL,
};
use manifold_prox::{ManifoldKind, ManifoldPoint};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = ManifoldKind> {
    prop_oneof![
        Just(ManifoldKind::Euclidean(3)),
        Just(ManifoldKind::PositiveReals),
        Just(ManifoldKind::Spd(2)),
        Just(ManifoldKind::Spd(3)),
    ]
}

fn spd_kinds() -> impl Strategy<Value = ManifoldKind> {
    prop_oneof![Just(ManifoldKind::Spd(2)), Just(ManifoldKind::Spd(3)), Just(ManifoldKind::Spd(4))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_and_norm_distance(kind in kinds(), s1: u64, s2: u64, scale in 0.01f64..10.0) {
        let p = random_point(kind, 2.0, s1).unwrap();
        let v = random_tangent(&p, scale, s2).unwrap();
        let q = exp_map(&p, &v).unwrap();
        let back = log_map(&p, &q).unwrap();
        let tol = 1e-8 * (1.0 + v.norm());
        prop_assert!(back.sub(&v).unwrap().norm() <= tol);
        prop_assert!((distance(&p, &q).unwrap() - v.norm()).abs() <= tol);
    }

    #[test]
    fn distance_is_a_metric(kind in kinds(), s1: u64, s2: u64, s3: u64) {
        let p = random_point(kind, 2.0, s1).unwrap();
        let q = random_point(kind, 2.0, s2).unwrap();
        let r = random_point(kind, 2.0, s3).unwrap();
        let pq = distance(&p, &q).unwrap();
        prop_assert!((pq - distance(&q, &p).unwrap()).abs() <= 1e-10 * (1.0 + pq));
        prop_assert!(pq <= distance(&p, &r).unwrap() + distance(&r, &q).unwrap() + 1e-10);
        prop_assert!(distance(&p, &p).unwrap() <= 1e-12);
    }

    #[test]
    fn transport_is_an_isometry(kind in kinds(), s1: u64, s2: u64, s3: u64, s4: u64) {
        let p = random_point(kind, 2.0, s1).unwrap();
        let q = random_point(kind, 2.0, s2).unwrap();
        let u = random_tangent(&p, 3.0, s3).unwrap();
        let v = random_tangent(&p, 3.0, s4).unwrap();
        let before = inner(&u, &v).unwrap();
        let pu = parallel_transport(&p, &q, &u).unwrap();
        let pv = parallel_transport(&p, &q, &v).unwrap();
        prop_assert_eq!(pu.base(), &q);
        let after = inner(&pu, &pv).unwrap();
        prop_assert!((after - before).abs() <= 1e-8 * (1.0 + before.abs()));
    }

    #[test]
    fn transport_maps_the_geodesic_velocity(kind in kinds(), s1: u64, s2: u64) {
        // The velocity of the geodesic from p to q is carried to minus the
        // velocity of the reversed geodesic.
        let p = random_point(kind, 2.0, s1).unwrap();
        let q = random_point(kind, 2.0, s2).unwrap();
        let v = log_map(&p, &q).unwrap();
        let moved = parallel_transport(&p, &q, &v).unwrap();
        let back = log_map(&q, &p).unwrap().scaled(-1.0);
        prop_assert!(moved.sub(&back).unwrap().norm() <= 1e-8 * (1.0 + v.norm()));
    }

    #[test]
    fn half_squared_distance_gradient_is_strongly_monotone(kind in kinds(), s1: u64, s2: u64, s3: u64) {
        let anchor = random_point(kind, 2.0, s1).unwrap();
        let p = random_point(kind, 2.0, s2).unwrap();
        let q = random_point(kind, 2.0, s3).unwrap();
        let xp = grad_half_dist_sq(&anchor, &p).unwrap();
        let xq = grad_half_dist_sq(&anchor, &q).unwrap();
        let diff = parallel_transport(&p, &q, &xp).unwrap().sub(&xq).unwrap();
        let lhs = inner(&log_map(&q, &p).unwrap(), &diff).unwrap();
        let d = distance(&p, &q).unwrap();
        prop_assert!(lhs >= d * d - 1e-8, "lhs {} d^2 {}", lhs, d * d);
    }

    #[test]
    fn positive_reals_are_isometric_to_the_line(x in 1e-6f64..1e6, y in 1e-6f64..1e6) {
        let p = ManifoldPoint::positive(x).unwrap();
        let q = ManifoldPoint::positive(y).unwrap();
        let expected = (x.ln() - y.ln()).abs();
        let scale = 1.0 + x.ln().abs() + y.ln().abs();
        prop_assert!((distance(&p, &q).unwrap() - expected).abs() <= 4.0 * f64::EPSILON * scale);
    }

    #[test]
    fn spd_operations_stay_symmetric(kind in spd_kinds(), s1: u64, s2: u64, s3: u64) {
        let p = random_point(kind, 2.0, s1).unwrap();
        let q = random_point(kind, 2.0, s2).unwrap();
        let v = random_tangent(&p, 4.0, s3).unwrap();
        prop_assert!(Mat::asymmetry(&exp_map(&p, &v).unwrap().matrix()) <= SYM_TOL);
        prop_assert!(Mat::asymmetry(&log_map(&p, &q).unwrap().matrix()) <= SYM_TOL);
        prop_assert!(Mat::asymmetry(&parallel_transport(&p, &q, &v).unwrap().matrix()) <= SYM_TOL);
        prop_assert!(Mat::asymmetry(&grad_half_dist_sq(&q, &p).unwrap().matrix()) <= SYM_TOL);
    }

    #[test]
    fn random_generators_are_deterministic(kind in kinds(), seed: u64) {
        let p = random_point(kind, 1.5, seed).unwrap();
        prop_assert_eq!(&p, &random_point(kind, 1.5, seed).unwrap());
        prop_assert_eq!(random_tangent(&p, 1.0, seed).unwrap(), random_tangent(&p, 1.0, seed).unwrap());
    }
}

#[test]
fn mismatched_manifolds_are_rejected() {
    let p = ManifoldPoint::positive(2.0).unwrap();
    let q = ManifoldPoint::spd_diag(&[1.0, 2.0]).unwrap();
    assert!(distance(&p, &q).is_err());
    assert!(log_map(&p, &q).is_err());
    let v = q.zero_tangent();
    assert!(exp_map(&p, &v).is_err());
}

#[test]
fn boundary_points_are_rejected() {
    assert!(ManifoldPoint::positive(0.0).is_err());
    assert!(ManifoldPoint::positive(f64::NAN).is_err());
    assert!(ManifoldPoint::spd_diag(&[1.0, 1e-13]).is_err());
    assert!(ManifoldPoint::spd(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
}
