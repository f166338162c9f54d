use hwir_capi::*;
use std::ffi::{CStr, CString};
use std::ptr;

const ACC: &str = include_str!("../../core/tests/fixtures/fig3.llhd");

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = hwir_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn parse(text: &str) -> *mut HwirModule {
    let mut m = ptr::null_mut();
    let t = cstr(text);
    assert_eq!(unsafe { hwir_module_parse(t.as_ptr(), &mut m) }, HwirStatus::Ok);
    m
}

fn take(s: *mut std::ffi::c_char) -> String {
    let r = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { hwir_string_free(s) };
    r
}

#[test]
fn parse_print_roundtrip() {
    let m = parse(ACC);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hwir_module_print(m, &mut s) }, HwirStatus::Ok);
    let text = take(s);
    let m2 = parse(&text);
    assert_eq!(unsafe { hwir_module_print(m2, &mut s) }, HwirStatus::Ok);
    assert_eq!(take(s), text);
    unsafe {
        hwir_module_free(m);
        hwir_module_free(m2);
    }
}

#[test]
fn parse_error_sets_message() {
    let mut m = ptr::null_mut();
    let t = cstr("entity @x () -> () { %a = bogus }");
    assert_eq!(unsafe { hwir_module_parse(t.as_ptr(), &mut m) }, HwirStatus::Parse);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hwir_module_parse(ptr::null(), &mut m) }, HwirStatus::NullArgument);
    assert!(last_error().contains("text"));
    let mut level = 0;
    assert_eq!(unsafe { hwir_module_level(ptr::null(), &mut level) }, HwirStatus::NullArgument);
    unsafe {
        hwir_module_free(ptr::null_mut());
        hwir_sim_free(ptr::null_mut());
        hwir_string_free(ptr::null_mut());
    }
}

#[test]
fn lower_reports_rejections() {
    let m = parse(ACC);
    let mut level = 0;
    assert_eq!(unsafe { hwir_module_level(m, &mut level) }, HwirStatus::Ok);
    assert_eq!(level, 1);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { hwir_module_lower(m, 2, &mut report) }, HwirStatus::Ok);
    let report = take(report);
    assert_eq!(report.lines().count(), 1, "{}", report);
    assert!(report.starts_with("@acc_tb_initial\t"), "{}", report);
    assert_eq!(unsafe { hwir_module_lower(m, 3, ptr::null_mut()) }, HwirStatus::Lower);
    assert!(last_error().contains("synthesis out of scope"));
    unsafe { hwir_module_free(m) };
}

#[test]
fn link_two_modules() {
    let (a, b) = ACC.split_at(ACC.find("; Testbench").unwrap());
    let ma = parse(a);
    let mut mb = ptr::null_mut();
    let tb = cstr(b);
    // The testbench alone refers to an undefined @acc.
    assert_eq!(unsafe { hwir_module_parse(tb.as_ptr(), &mut mb) }, HwirStatus::Verify);
    let tb_decl = format!("declare @acc (i1$, i32$, i1$) -> (i32$)\n{}", b);
    let mb = parse(&tb_decl);
    let mut linked = ptr::null_mut();
    let both = [ma as *const _, mb as *const _];
    assert_eq!(unsafe { hwir_module_link(both.as_ptr(), 2, &mut linked) }, HwirStatus::Ok);
    let mut sim = ptr::null_mut();
    let top = cstr("acc_tb");
    assert_eq!(unsafe { hwir_sim_new(linked, top.as_ptr(), &mut sim) }, HwirStatus::Ok);
    let mut summary = HwirSimSummary::default();
    assert_eq!(unsafe { hwir_sim_run(sim, ptr::null(), &mut summary) }, HwirStatus::Ok);
    assert_eq!(summary.assertion_failures, 0);
    assert_eq!(summary.finished, 1);
    unsafe {
        hwir_sim_free(sim);
        hwir_module_free(linked);
        hwir_module_free(ma);
        hwir_module_free(mb);
    }
}

#[test]
fn simulate_and_dump() {
    let m = parse(ACC);
    let mut sim = ptr::null_mut();
    let top = cstr("@acc_tb");
    assert_eq!(unsafe { hwir_sim_new(m, top.as_ptr(), &mut sim) }, HwirStatus::Ok);
    let until = cstr("10ns");
    let mut summary = HwirSimSummary::default();
    assert_eq!(unsafe { hwir_sim_run(sim, until.as_ptr(), &mut summary) }, HwirStatus::Ok);
    assert_eq!(summary.end_fs, 10_000_000);
    assert_eq!(summary.finished, 0);
    let mut v = ptr::null_mut();
    let name = cstr("acc_tb.q");
    assert_eq!(unsafe { hwir_sim_value(sim, name.as_ptr(), &mut v) }, HwirStatus::Ok);
    // Inputs 0..4 have been clocked in by 10ns.
    assert_eq!(take(v), "10");
    let bad = cstr("acc_tb.nope");
    assert_eq!(unsafe { hwir_sim_value(sim, bad.as_ptr(), &mut v) }, HwirStatus::NotFound);
    let dir = std::env::temp_dir().join(format!("hwir-capi-{}.vcd", std::process::id()));
    let path = cstr(dir.to_str().unwrap());
    assert_eq!(unsafe { hwir_sim_write_vcd(sim, path.as_ptr()) }, HwirStatus::Ok);
    let vcd = std::fs::read_to_string(&dir).unwrap();
    std::fs::remove_file(&dir).unwrap();
    assert!(vcd.contains("$enddefinitions"));
    let bad_time = cstr("ten ns");
    assert_eq!(unsafe { hwir_sim_run(sim, bad_time.as_ptr(), &mut summary) }, HwirStatus::Parse);
    unsafe {
        hwir_sim_free(sim);
        hwir_module_free(m);
    }
}
