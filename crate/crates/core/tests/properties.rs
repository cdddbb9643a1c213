use proptest::prelude::*;

use specq_core::embedret::{isotonic_regression, r_pair, Zeta};
use specq_core::graphs::{area_factor, mass_expansion, MVector, PlanarDomain, Polynomial, SheetSpec};
use specq_core::qpoints::{brute_force_assignment, cost_matrix, hungarian_assignment, metric_g};
use specq_core::specpoints::{iota, metric_gs, triple_distance};
use specq_core::{QPoint, SpecPoint};

fn qpoint(q: usize, n: usize) -> impl Strategy<Value = QPoint> {
    prop::collection::vec(-3.0f64..3.0, q * n).prop_map(move |c| QPoint::from_flat(q, n, c))
}

fn specpoint(q: usize, n: usize) -> impl Strategy<Value = SpecPoint> {
    (qpoint(q, n), any::<bool>()).prop_map(|(b, s)| SpecPoint::new(b, if s { 1 } else { -1 }))
}

fn triple() -> impl Strategy<Value = (SpecPoint, SpecPoint, SpecPoint)> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(q, n)| (specpoint(q, n), specpoint(q, n), specpoint(q, n)))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn g_is_a_metric((a, b, c) in triple()) {
        let (a, b, c) = (a.base(), b.base(), c.base());
        prop_assert_eq!(metric_g(a, a).unwrap(), 0.0);
        prop_assert_eq!(metric_g(a, b).unwrap(), metric_g(b, a).unwrap());
        let (ab, bc) = (metric_g(a, b).unwrap(), metric_g(b, c).unwrap());
        prop_assert!(metric_g(a, c).unwrap() <= ab + bc + 1e-12 * (1.0 + ab + bc));
    }

    #[test]
    fn gs_is_a_metric((a, b, c) in triple()) {
        prop_assert_eq!(metric_gs(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(metric_gs(&a, &b).unwrap(), metric_gs(&b, &a).unwrap());
        let (ab, bc) = (metric_gs(&a, &b).unwrap(), metric_gs(&b, &c).unwrap());
        prop_assert!(metric_gs(&a, &c).unwrap() <= ab + bc + 1e-12 * (1.0 + ab + bc));
        prop_assert!(metric_g(a.base(), b.base()).unwrap() <= ab + 1e-12);
    }

    #[test]
    fn iota_is_an_isometry((a, b, _) in triple()) {
        let t = triple_distance(&iota(&a), &iota(&b)).unwrap();
        prop_assert!((t - metric_gs(&a, &b).unwrap()).abs() <= 1e-12 * (1.0 + t));
    }

    #[test]
    fn hungarian_matches_enumeration(q in 1usize..=5, seed in prop::collection::vec(-1.0f64..1.0, 30)) {
        let a = QPoint::from_flat(q, 2, seed[..2 * q].to_vec());
        let b = QPoint::from_flat(q, 2, seed[10..10 + 2 * q].to_vec());
        let c = cost_matrix(&a, &b);
        prop_assert_eq!(brute_force_assignment(&c, q).1, hungarian_assignment(&c, q).1);
    }

    #[test]
    fn zeta_preserves_norm_and_retraction_fixes_image(p in (1usize..=4).prop_flat_map(|q| specpoint(q, 1))) {
        let z = Zeta::for_dims(p.q(), 1).unwrap();
        let e = z.zeta(&p);
        prop_assert!((dist(&e, &vec![0.0; e.len()]) - p.norm()).abs() <= 1e-12 * (1.0 + p.norm()));
        prop_assert_eq!(z.varrho(&e), e.clone());
        let back = z.zeta_inv(&e).unwrap();
        prop_assert!(metric_gs(&back, &p).unwrap() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn varrho_lands_in_image(e in prop::collection::vec(-2.0f64..2.0, 5)) {
        let z = Zeta::for_dims(2, 1).unwrap();
        let r = z.varrho(&e);
        prop_assert!(z.in_image(&r));
        prop_assert_eq!(z.varrho(&r), r);
    }

    #[test]
    fn r_pair_is_sqrt2_lipschitz(x in prop::collection::vec(-1.0f64..1.0, 6), y in prop::collection::vec(-1.0f64..1.0, 6)) {
        let (a, b) = r_pair(&x[..3], &x[3..]);
        let (c, d) = r_pair(&y[..3], &y[3..]);
        let num = (dist(&a, &c).powi(2) + dist(&b, &d).powi(2)).sqrt();
        prop_assert!(num <= std::f64::consts::SQRT_2 * dist(&x, &y) + 1e-12);
    }

    #[test]
    fn isotonic_regression_is_monotone_and_mean_preserving(x in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let y = isotonic_regression(&x);
        prop_assert!(y.windows(2).all(|w| w[0] <= w[1]));
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        prop_assert!((sx - sy).abs() <= 1e-12 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn mvector_is_unit(d in prop::collection::vec(-3.0f64..3.0, 6), n in 1usize..=3) {
        let v = MVector::from_gradient(&d[..2 * n], n, 2);
        prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
        prop_assert!(area_factor(&d[..2 * n], n, 2) >= 1.0);
    }

    #[test]
    fn no_distance_is_symmetric(a in prop::collection::vec(-2.0f64..2.0, 2), b in prop::collection::vec(-2.0f64..2.0, 2)) {
        let (u, v) = (MVector::from_gradient(&a, 1, 2), MVector::from_gradient(&b, 1, 2));
        prop_assert_eq!(u.no_dist_sq(&v), v.no_dist_sq(&u));
        prop_assert_eq!(u.negated().no_dist_sq(&v), u.no_dist_sq(&v));
    }

    #[test]
    fn mass_at_least_flat(c in prop::collection::vec(-1.0f64..1.0, 3)) {
        let p = Polynomial::linear(&c[..2]).add(&Polynomial::monomial(c[2], vec![1, 1]));
        let spec = SheetSpec::new(vec![vec![p], vec![Polynomial::zero(2)]], None).unwrap();
        let r = mass_expansion(&spec, &PlanarDomain::disk(0.5), 4).unwrap();
        prop_assert!(r.mass >= r.flat);
    }

    #[test]
    fn polynomial_json_round_trip(terms in prop::collection::vec((-5i32..5, 0u32..4, 0u32..4), 0..6)) {
        let p = Polynomial { vars: 2, terms: terms.iter().map(|&(c, i, j)| (c as f64 / 4.0, vec![i, j])).collect() };
        let back = Polynomial::from_json(&p.to_json(), "p").unwrap();
        prop_assert_eq!(back, p);
    }
}
