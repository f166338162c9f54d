mod common;

use common::oracle::*;
use hwir::ir::LogicDigit;
use proptest::prelude::*;

#[test]
fn resolution_matches_table() {
    check_resolution_table().unwrap();
}

#[test]
fn resolution_laws() {
    check_resolution_laws(1, 10_000).unwrap();
}

#[test]
fn digit_chars_roundtrip() {
    for d in LogicDigit::ALL {
        assert_eq!(LogicDigit::from_char(d.to_char()), Some(d));
    }
    assert_eq!(LogicDigit::ALL.len(), 9);
}

fn digit() -> impl Strategy<Value = LogicDigit> {
    prop::sample::select(LogicDigit::ALL.to_vec())
}

proptest! {
    #[test]
    fn u_dominates(a in digit()) {
        prop_assert_eq!(a.resolve(LogicDigit::U), LogicDigit::U);
    }

    #[test]
    fn z_is_identity(a in digit()) {
        let expect = if a == LogicDigit::DontCare { LogicDigit::X } else { a };
        prop_assert_eq!(a.resolve(LogicDigit::Z), expect);
    }

    #[test]
    fn idempotent_except_dont_care(a in digit()) {
        prop_assume!(a != LogicDigit::DontCare);
        prop_assert_eq!(a.resolve(a), a);
    }
}
