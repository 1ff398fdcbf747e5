use num_bigint::BigInt;
use proptest::prelude::*;
use twistforge::tate::local_data;
use twistforge::twist::twist_local_data;
use twistforge::weierstrass::{apply_isomorphism, twist_model};
use twistforge::{Isomorphism, KodairaType, Prime, Rational, TwistClass, WeierstrassModel};

fn prime() -> impl Strategy<Value = Prime> {
    prop::sample::select(vec![2u64, 3, 5, 7, 11]).prop_map(|p| Prime::new(p).unwrap())
}

/// Integral models with structured p-power factors, nonsingular.
fn curve() -> impl Strategy<Value = [i64; 5]> {
    let coeff = (
        -40i64..=40,
        0u32..=4,
        prop::sample::select(vec![1i64, 2, 3]),
    )
        .prop_map(|(m, k, b)| m * b.pow(k));
    prop::array::uniform5(coeff).prop_filter("nonsingular", |a| {
        !num_traits::Zero::is_zero(&WeierstrassModel::from_ints(*a).discriminant())
    })
}

fn twist_param() -> impl Strategy<Value = i64> {
    (
        prop::sample::select(vec![1i64, -1, 2, -2, 3, -3, 5, 6, 7, -7, 10, 11, 14, 15]),
        0u32..=1,
        prop::sample::select(vec![1i64, 3, 5, 7, 11]),
    )
        .prop_map(|(u, k, q)| u * q.pow(k))
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, prop::sample::select(vec![1i64, 2, 3, 4, 6]))
        .prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn trivial_twist_is_identity(a in curve(), p in prime()) {
        let e = WeierstrassModel::from_ints(a);
        let t = twist_local_data(&e, &p, &BigInt::from(1)).unwrap();
        prop_assert_eq!(t.base, t.twisted);
        prop_assert_eq!(t.base, local_data(&e, &p).unwrap());
    }

    #[test]
    fn twisting_twice_returns_the_base(a in curve(), p in prime(), d in twist_param()) {
        let e = WeierstrassModel::from_ints(a);
        let class = TwistClass::new(d).unwrap();
        let once = twist_local_data(&e, &p, &BigInt::from(d)).unwrap();
        let back = twist_local_data(&twist_model(&e, &class), &p, &BigInt::from(d)).unwrap();
        prop_assert_eq!(back.twisted, once.base);
        prop_assert_eq!(back.base, once.twisted);
    }

    #[test]
    fn twist_depends_on_square_class(a in curve(), p in prime(), d in twist_param(), k in prop::sample::select(vec![1i64, 2, 3, 5, 7, 12])) {
        let e = WeierstrassModel::from_ints(a);
        let one = twist_local_data(&e, &p, &BigInt::from(d)).unwrap();
        let other = twist_local_data(&e, &p, &BigInt::from(d * k * k)).unwrap();
        prop_assert_eq!(one.twisted, other.twisted);
    }

    #[test]
    fn tables_match_tate_on_the_twist_model(a in curve(), p in prime(), d in twist_param()) {
        let e = WeierstrassModel::from_ints(a);
        let t = twist_local_data(&e, &p, &BigInt::from(d)).unwrap();
        let oracle = local_data(&twist_model(&e, &TwistClass::new(d).unwrap()), &p).unwrap();
        prop_assert_eq!(t.twisted, oracle);
    }

    #[test]
    fn local_data_is_isomorphism_invariant(
        a in curve(),
        p in prime(),
        u in prop::sample::select(vec![(1i64, 1i64), (-1, 1), (2, 1), (1, 3), (3, 2), (5, 1)]),
        r in small_rational(),
        s in small_rational(),
        w in small_rational(),
    ) {
        let e = WeierstrassModel::from_ints(a);
        let phi = Isomorphism::new(Rational::new(u.0.into(), u.1.into()), r, s, w).unwrap();
        prop_assert_eq!(local_data(&apply_isomorphism(&e, &phi), &p).unwrap(), local_data(&e, &p).unwrap());
    }

    #[test]
    fn ogg_formula_holds(a in curve(), p in prime()) {
        let data = local_data(&WeierstrassModel::from_ints(a), &p).unwrap();
        prop_assert_eq!(data.f + data.m, data.delta + 1);
        prop_assert_eq!(data.m, data.kodaira.component_count());
    }

    #[test]
    fn kodaira_symbols_round_trip(n in 0u32..40, star in any::<bool>(), other in 0usize..6) {
        let named = [KodairaType::II, KodairaType::III, KodairaType::IV, KodairaType::IVStar, KodairaType::IIIStar, KodairaType::IIStar];
        for t in [if star { KodairaType::IStar(n) } else { KodairaType::I(n) }, named[other]] {
            prop_assert_eq!(t.to_string().parse::<KodairaType>().unwrap(), t);
        }
    }
}
