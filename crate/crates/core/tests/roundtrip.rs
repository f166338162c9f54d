mod common;

use common::oracle::check_fixpoint;
use common::*;
use hwir::textio::{parse_module, print_module};
use hwir::verifier::verify;
use proptest::prelude::*;

fn assert_fixpoint(text: &str) {
    if let Err(e) = check_fixpoint(text) {
        panic!("{}", e);
    }
}

#[test]
fn fixtures_roundtrip() {
    let paths = fixture_paths();
    assert!(paths.len() >= 20, "only {} fixtures", paths.len());
    for p in paths {
        let text = std::fs::read_to_string(&p).unwrap();
        assert_fixpoint(&text);
    }
}

#[test]
fn fixtures_verify() {
    for p in fixture_paths() {
        let m = parse(&std::fs::read_to_string(&p).unwrap());
        let errs: Vec<_> = verify(&m).into_iter().filter(|d| d.is_error()).collect();
        assert!(errs.is_empty(), "{}: {:?}", p.display(), errs);
    }
}

#[test]
fn generated_modules_verify() {
    for seed in 0..200 {
        let text = ModuleGen::new(seed).module();
        let m = parse(&text);
        let errs: Vec<_> = verify(&m).into_iter().filter(|d| d.is_error()).collect();
        assert!(errs.is_empty(), "seed {}: {:?}\n{}", seed, errs, text);
    }
}

#[test]
fn anonymous_names_renumber() {
    let m = parse("func @f (i8 %7) i8 {\n%3:\n  %9 = add i8 %7, %7\n  br %1\n%1:\n  ret i8 %9\n}\n");
    let p = print_module(&m);
    assert!(p.contains("%1 = add i8 %0, %0"), "{}", p);
    assert!(p.contains("%2:\n") && p.contains("br %3\n"), "{}", p);
    assert_fixpoint(&p);
}

#[test]
fn rejects_garbage() {
    for bad in [
        "entity @e () -> () { %a = const i8 256 }",
        "func @f () void {\n%e:\n  ret i8 %x\n}",
        "proc @p () -> () {\n%e:\n  wait %nowhere\n}",
        "entity @e (i8 %a) -> () {}",
        "@x",
    ] {
        let r = parse_module(bad);
        let v = r.as_ref().map(|m| verify(m).into_iter().any(|d| d.is_error()));
        assert!(r.is_err() || v == Ok(true), "accepted: {}", bad);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_modules_roundtrip(seed in any::<u64>()) {
        assert_fixpoint(&ModuleGen::new(seed).module());
    }
}
