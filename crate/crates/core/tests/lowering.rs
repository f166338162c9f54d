mod common;

use common::oracle::*;
use common::*;
use hwir::ir::UnitName;
use hwir::passes::lower_module;
use hwir::textio::print_module;
use hwir::verifier::classify_level;

#[test]
fn golden_accumulator() {
    check_golden_lowering().unwrap();
}

#[test]
fn lowered_accumulator_matches_fixture() {
    let mut m = parse(&fixture("fig5_left.llhd"));
    lower_module(&mut m, 2).unwrap();
    let golden = parse(&fixture("fig5_right.llhd"));
    let lowered = parse(&print_module(&m));
    assert_eq!(classify_level(&lowered).unwrap().module_level, 2);
    let name = UnitName::global("acc");
    let (a, b) = (lowered.lookup(&name).unwrap(), golden.lookup(&name).unwrap());
    assert_eq!(lowered.unit(a).sig, golden.unit(b).sig);
}

#[test]
fn accumulator_equivalence() {
    for seed in 0..3 {
        check_acc_equivalence(seed, 300).unwrap();
    }
}

#[test]
fn two_region_equivalence() {
    for seed in 0..12 {
        check_two_region(seed, 300).unwrap();
    }
}

#[test]
fn mem2reg_and_unroll() {
    check_mem2reg_unroll().unwrap();
}

#[test]
fn level_three_is_refused() {
    let mut m = parse(&fixture("fig5_left.llhd"));
    let e = lower_module(&mut m, 3).unwrap_err();
    assert!(e.contains("out of scope"), "{}", e);
}

#[test]
fn testbench_processes_are_kept() {
    let m0 = parse(&fixture("fig3.llhd"));
    let mut m = m0.clone();
    let r = lower_module(&mut m, 2).unwrap();
    assert!(r
        .rejections
        .iter()
        .any(|x| x.unit == UnitName::global("acc_tb_initial")));
    let id = m.lookup(&UnitName::global("acc_tb_initial")).unwrap();
    let id0 = m0.lookup(&UnitName::global("acc_tb_initial")).unwrap();
    assert!(m.unit(id).structurally_eq(m0.unit(id0)));
}

#[test]
fn every_fixture_survives_lowering() {
    for p in fixture_paths() {
        let mut m = parse(&std::fs::read_to_string(&p).unwrap());
        lower_module(&mut m, 2).unwrap();
        let text = print_module(&m);
        let again = parse(&text);
        classify_level(&again).unwrap_or_else(|d| panic!("{}: {:?}\n{}", p.display(), d, text));
    }
}
