use polsym::io::{format_field, parse_field};
use polsym_core::{GridSpec, MultiField, ScalarField};
use proptest::prelude::*;

fn multi_field() -> impl Strategy<Value = MultiField> {
    (1usize..=3, prop::sample::select(vec![3usize, 5, 7]), 1usize..=3, 0.5f64..20.0).prop_flat_map(
        |(dim, n, m, l)| {
            let spec = GridSpec::new(dim, n, l).unwrap();
            let value = prop_oneof![
                Just(0.0),
                prop::num::f64::NORMAL,
                prop::num::f64::SUBNORMAL,
                -1e3f64..1e3
            ];
            prop::collection::vec(prop::collection::vec(value, spec.len()), m).prop_map(move |cs| {
                MultiField::new(cs.into_iter().map(|v| ScalarField::new(spec, v).unwrap()).collect()).unwrap()
            })
        },
    )
}

proptest! {
    #[test]
    fn write_then_read_is_bit_exact(u in multi_field()) {
        let back = parse_field(&format_field(&u)).unwrap();
        prop_assert_eq!(back.spec(), u.spec());
        for (a, b) in back.components().iter().zip(u.components()) {
            let bits = |f: &ScalarField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }
}
