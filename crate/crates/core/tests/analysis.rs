mod common;

use common::oracle::*;
use proptest::prelude::*;

#[test]
fn dominators_and_regions() {
    for seed in 0..300 {
        check_cfg(seed).unwrap();
    }
}

#[test]
fn dnf_truth_tables() {
    let vs = leaf_values();
    for seed in 0..2000 {
        check_dnf(seed, &vs).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cfg_oracle(seed in any::<u64>()) {
        prop_assert_eq!(check_cfg(seed), Ok(()));
    }

    #[test]
    fn dnf_oracle(seed in any::<u64>()) {
        let vs = leaf_values();
        prop_assert_eq!(check_dnf(seed, &vs), Ok(()));
    }
}
