//! Random program generators and helpers shared by the integration tests.
#![allow(dead_code)]

use hwir::ir::{Module, TimeValue, UnitName, Val};
use hwir::passes::lower_module;
use hwir::sim::{elaborate, Summary};
use hwir::textio::parse_module;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::path::PathBuf;

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    let p = fixture_dir().join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {}", p.display(), e))
}

pub fn fixture_paths() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map_or(false, |x| x == "llhd"))
        .collect();
    v.sort();
    v
}

pub fn parse(text: &str) -> Module {
    parse_module(text).unwrap_or_else(|ds| {
        let msgs: Vec<String> = ds.iter().map(|d| d.render("<input>", None)).collect();
        panic!("{}\n--- input ---\n{}", msgs.join("\n"), text)
    })
}

pub fn ns(n: u64) -> TimeValue {
    TimeValue {
        fs: n * 1_000_000,
        delta: 0,
        epsilon: 0,
    }
}

// ---------------------------------------------------------------------------
// Random control-flow graphs

pub enum Term {
    Br(usize),
    CondBr(usize, usize),
    Wait(usize),
    Halt,
}

pub struct RandomCfg {
    pub text: String,
    pub terms: Vec<Term>,
}

impl RandomCfg {
    pub fn succs(&self) -> Vec<Vec<usize>> {
        self.terms
            .iter()
            .map(|t| match *t {
                Term::Br(a) | Term::Wait(a) => vec![a],
                Term::CondBr(a, b) => vec![a, b],
                Term::Halt => vec![],
            })
            .collect()
    }

    pub fn ends_in_wait(&self, b: usize) -> bool {
        matches!(self.terms[b], Term::Wait(_))
    }
}

/// A process with `n` blocks `%b0..` and random terminators.
pub fn random_cfg(r: &mut Rand, n: usize) -> RandomCfg {
    let mut terms = vec![];
    let mut text = String::from("proc @cfg (i1$ %s) -> () {\n");
    for i in 0..n {
        let t = match r.gen_range(0..10) {
            0..=3 => Term::Br(r.gen_range(0..n)),
            4..=6 => Term::CondBr(r.gen_range(0..n), r.gen_range(0..n)),
            7..=8 => Term::Wait(r.gen_range(0..n)),
            _ => Term::Halt,
        };
        text += &format!("%b{}:\n", i);
        if i == 0 {
            text += "  %c = prb i1$ %s\n";
        }
        text += &match t {
            Term::Br(a) => format!("  br %b{}\n", a),
            Term::CondBr(a, b) => format!("  br %c, %b{}, %b{}\n", a, b),
            Term::Wait(a) => format!("  wait %b{}, %s\n", a),
            Term::Halt => "  halt\n".into(),
        };
        terms.push(t);
    }
    text += "}\n";
    RandomCfg { text, terms }
}

/// Blocks reachable from `entry` without passing through `avoid`.
pub fn reachable_avoiding(succs: &[Vec<usize>], entry: usize, avoid: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; succs.len()];
    if Some(entry) == avoid {
        return seen;
    }
    let mut stack = vec![entry];
    seen[entry] = true;
    while let Some(b) = stack.pop() {
        for &s in &succs[b] {
            if !seen[s] && Some(s) != avoid {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

// ---------------------------------------------------------------------------
// Random modules for round-tripping

#[derive(Clone, PartialEq, Debug)]
enum Ty {
    Int(usize),
    Enum(usize),
    Logic(usize),
    Time,
    Arr(usize, Box<Ty>),
    Struct(Vec<Ty>),
    Sig(Box<Ty>),
    Ptr(Box<Ty>),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Ty::Int(w) => write!(f, "i{}", w),
            Ty::Enum(n) => write!(f, "n{}", n),
            Ty::Logic(w) => write!(f, "l{}", w),
            Ty::Time => write!(f, "time"),
            Ty::Arr(n, t) => write!(f, "[{} x {}]", n, t),
            Ty::Struct(fs) => {
                write!(f, "{{")?;
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", t)?;
                }
                write!(f, "}}")
            }
            Ty::Sig(t) => write!(f, "{}$", t),
            Ty::Ptr(t) => write!(f, "{}*", t),
        }
    }
}

const TIME_UNITS: [&str; 6] = ["s", "ms", "us", "ns", "ps", "fs"];
const DIGITS: &[u8] = b"UX01ZWLH-";

fn random_time(r: &mut Rand) -> String {
    let mut s = format!("{}{}", r.gen_range(0..100), TIME_UNITS.choose(r).unwrap());
    if r.gen_bool(0.3) {
        s += &format!(" {}d", r.gen_range(1..4));
    }
    if r.gen_bool(0.3) {
        s += &format!(" {}e", r.gen_range(1..4));
    }
    s
}

fn scalar_ty(r: &mut Rand) -> Ty {
    match r.gen_range(0..10) {
        0..=5 => Ty::Int(*[1, 1, 8, 16, 32, 64, 3, 100].choose(r).unwrap()),
        6 => Ty::Enum(r.gen_range(1..6)),
        7..=8 => Ty::Logic(r.gen_range(1..6)),
        _ => Ty::Time,
    }
}

fn value_ty(r: &mut Rand, depth: usize) -> Ty {
    if depth > 0 && r.gen_bool(0.2) {
        if r.gen_bool(0.5) {
            Ty::Arr(r.gen_range(1..4), Box::new(value_ty(r, depth - 1)))
        } else {
            Ty::Struct((0..r.gen_range(1..4)).map(|_| value_ty(r, depth - 1)).collect())
        }
    } else {
        scalar_ty(r)
    }
}

/// Values visible at the current point of a unit body.
#[derive(Clone, Default)]
struct Scope {
    vals: Vec<(String, Ty)>,
}

impl Scope {
    fn of(&self, ty: &Ty) -> Vec<String> {
        self.vals.iter().filter(|(_, t)| t == ty).map(|(n, _)| n.clone()).collect()
    }

    fn any_where(&self, f: impl Fn(&Ty) -> bool) -> Vec<(String, Ty)> {
        self.vals.iter().filter(|(_, t)| f(t)).cloned().collect()
    }
}

struct UnitSig {
    name: String,
    inputs: Vec<Ty>,
    outputs: Vec<Ty>,
    /// `Some(ret)` for functions.
    ret: Option<Ty>,
}

pub struct ModuleGen {
    r: Rand,
    next: usize,
    out: String,
    funcs: Vec<UnitSig>,
    comps: Vec<UnitSig>,
}

impl ModuleGen {
    pub fn new(seed: u64) -> ModuleGen {
        ModuleGen {
            r: rng(seed),
            next: 0,
            out: String::new(),
            funcs: vec![],
            comps: vec![],
        }
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        if self.r.gen_bool(0.15) {
            // Numeric names are anonymous in the text format.
            format!("%{}", 1000 + self.next)
        } else {
            format!("%v{}", self.next)
        }
    }

    fn line(&mut self, s: String) {
        self.out += "  ";
        self.out += &s;
        self.out += "\n";
    }

    fn constant(&mut self, sc: &mut Scope, ty: &Ty) -> String {
        let lit = match ty {
            Ty::Int(w) => {
                let max = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
                let v = self.r.gen_range(0..=max.min(1 << 20));
                if *w > 1 && self.r.gen_bool(0.1) {
                    "-1".to_string()
                } else {
                    v.to_string()
                }
            }
            Ty::Enum(n) => self.r.gen_range(0..*n).to_string(),
            Ty::Logic(w) => {
                let s: String = (0..*w).map(|_| *DIGITS.choose(&mut self.r).unwrap() as char).collect();
                format!("\"{}\"", s)
            }
            Ty::Time => random_time(&mut self.r),
            _ => unreachable!(),
        };
        let v = self.fresh();
        self.line(format!("{} = const {} {}", v, ty, lit));
        sc.vals.push((v.clone(), ty.clone()));
        v
    }

    /// A value of type `ty`, reusing one from scope or building it.
    fn value(&mut self, sc: &mut Scope, ty: &Ty) -> String {
        let have = sc.of(ty);
        if !have.is_empty() && self.r.gen_bool(0.7) {
            return have.choose(&mut self.r).unwrap().clone();
        }
        match ty {
            Ty::Arr(n, t) => {
                let elems: Vec<String> = (0..*n).map(|_| self.value(sc, t)).collect();
                let v = self.fresh();
                self.line(format!("{} = array {} [{}]", v, t, elems.join(", ")));
                sc.vals.push((v.clone(), ty.clone()));
                v
            }
            Ty::Struct(fs) => {
                let elems: Vec<String> = fs.iter().map(|t| self.value(sc, t)).collect();
                let v = self.fresh();
                self.line(format!("{} = struct {} {{{}}}", v, ty, elems.join(", ")));
                sc.vals.push((v.clone(), ty.clone()));
                v
            }
            Ty::Sig(_) | Ty::Ptr(_) => panic!("no constants of type {}", ty),
            _ => self.constant(sc, ty),
        }
    }

    fn def(&mut self, sc: &mut Scope, ty: Ty, rhs: String) -> String {
        let v = self.fresh();
        self.line(format!("{} = {}", v, rhs));
        sc.vals.push((v.clone(), ty));
        v
    }

    /// One random pure instruction.
    fn pure_op(&mut self, sc: &mut Scope) {
        match self.r.gen_range(0..12) {
            0 => {
                let t = scalar_ty(&mut self.r);
                self.constant(sc, &t);
            }
            1..=3 => {
                let t = if self.r.gen_bool(0.7) {
                    Ty::Int(*[1, 8, 16, 32, 64].choose(&mut self.r).unwrap())
                } else {
                    Ty::Logic(self.r.gen_range(1..6))
                };
                let ops = [
                    "add", "sub", "mul", "and", "or", "xor", "div", "sdiv", "mod", "smod", "rem", "srem",
                ];
                let op = *ops.choose(&mut self.r).unwrap();
                let (a, b) = (self.value(sc, &t), self.value(sc, &t));
                self.def(sc, t.clone(), format!("{} {} {}, {}", op, t, a, b));
            }
            4 => {
                let t = Ty::Int(*[1, 8, 32].choose(&mut self.r).unwrap());
                let op = if self.r.gen_bool(0.5) { "not" } else { "neg" };
                let a = self.value(sc, &t);
                self.def(sc, t.clone(), format!("{} {} {}", op, t, a));
            }
            5 | 6 => {
                let t = scalar_ty(&mut self.r);
                let ops: &[&str] = if matches!(t, Ty::Enum(_)) {
                    &["eq", "neq"]
                } else {
                    &["eq", "neq", "ult", "ugt", "ule", "uge", "slt", "sgt", "sle", "sge"]
                };
                let op = *ops.choose(&mut self.r).unwrap();
                let (a, b) = (self.value(sc, &t), self.value(sc, &t));
                self.def(sc, Ty::Int(1), format!("{} {} {}, {}", op, t, a, b));
            }
            7 => {
                let t = value_ty(&mut self.r, 1);
                let n = self.r.gen_range(1..4);
                let opts: Vec<String> = (0..n).map(|_| self.value(sc, &t)).collect();
                let st = if self.r.gen_bool(0.8) { Ty::Int(self.r.gen_range(1..4)) } else { Ty::Enum(3) };
                let s = self.value(sc, &st);
                self.def(sc, t.clone(), format!("mux {} [{}], {}", t, opts.join(", "), s));
            }
            8 => {
                let t = value_ty(&mut self.r, 2);
                let n = self.r.gen_range(1..4);
                let at = Ty::Arr(n, Box::new(t.clone()));
                let a = self.value(sc, &at);
                let i = self.r.gen_range(0..n);
                if self.r.gen_bool(0.5) {
                    self.def(sc, t.clone(), format!("extf {} {}, {}", at, a, i));
                } else {
                    let len = self.r.gen_range(1..=n - i);
                    let st = Ty::Arr(len, Box::new(t.clone()));
                    if self.r.gen_bool(0.5) {
                        self.def(sc, st, format!("exts {} {}, {}, {}", at, a, i, len));
                    } else {
                        let x = self.value(sc, &st);
                        self.def(sc, at.clone(), format!("inss {} {}, {}, {}, {}", at, a, x, i, len));
                    }
                }
            }
            9 => {
                let fs: Vec<Ty> = (0..self.r.gen_range(1..4)).map(|_| value_ty(&mut self.r, 1)).collect();
                let st = Ty::Struct(fs.clone());
                let s = self.value(sc, &st);
                let i = self.r.gen_range(0..fs.len());
                if self.r.gen_bool(0.5) {
                    self.def(sc, fs[i].clone(), format!("extf {} {}, {}", st, s, i));
                } else {
                    let x = self.value(sc, &fs[i]);
                    self.def(sc, st.clone(), format!("insf {} {}, {}, {}", st, s, x, i));
                }
            }
            10 => {
                let w = *[4, 8, 32].choose(&mut self.r).unwrap();
                let t = Ty::Int(w);
                let a = self.value(sc, &t);
                let h = self.value(sc, &t);
                let amt = self.value(sc, &Ty::Int(4));
                let op = if self.r.gen_bool(0.5) { "shl" } else { "shr" };
                self.def(sc, t.clone(), format!("{} {} {}, {}, {}", op, t, a, h, amt));
            }
            _ => {
                let w = *[8, 16, 32].choose(&mut self.r).unwrap();
                let t = Ty::Int(w);
                let a = self.value(sc, &t);
                let off = self.r.gen_range(0..w);
                let len = self.r.gen_range(1..=w - off);
                if self.r.gen_bool(0.5) {
                    self.def(sc, Ty::Int(len), format!("exts {} {}, {}, {}", t, a, off, len));
                } else {
                    let x = self.value(sc, &Ty::Int(len));
                    self.def(sc, t.clone(), format!("inss {} {}, {}, {}, {}", t, a, x, off, len));
                }
            }
        }
    }

    fn header(&mut self, kw: &str, name: &str, ins: &[Ty], outs: &[Ty], ret: Option<&Ty>, sc: &mut Scope) {
        let mut ps = vec![];
        for t in ins {
            let v = self.fresh();
            ps.push(format!("{} {}", t, v));
            sc.vals.push((v, t.clone()));
        }
        let mut os = vec![];
        for t in outs {
            let v = self.fresh();
            os.push(format!("{} {}", t, v));
            sc.vals.push((v, t.clone()));
        }
        match ret {
            Some(rt) => self.out += &format!("{} @{} ({}) {} {{\n", kw, name, ps.join(", "), rt),
            None => self.out += &format!("{} @{} ({}) -> ({}) {{\n", kw, name, ps.join(", "), os.join(", ")),
        }
    }

    fn block(&mut self, name: &str) {
        self.out += &format!("%{}:\n", name);
    }

    fn call(&mut self, sc: &mut Scope) {
        if self.funcs.is_empty() || !self.r.gen_bool(0.4) {
            let c = self.value(sc, &Ty::Int(1));
            self.line(format!("call void @llhd.assert ({})", c));
            return;
        }
        let i = self.r.gen_range(0..self.funcs.len());
        let (name, ins, ret) = {
            let f = &self.funcs[i];
            (f.name.clone(), f.inputs.clone(), f.ret.clone().unwrap())
        };
        let args: Vec<String> = ins.iter().map(|t| self.value(sc, t)).collect();
        if ret == Ty::Int(0) {
            self.line(format!("call void @{} ({})", name, args.join(", ")));
        } else {
            self.def(sc, ret.clone(), format!("call {} @{} ({})", ret, name, args.join(", ")));
        }
    }

    fn memory(&mut self, sc: &mut Scope) {
        let t = scalar_ty(&mut self.r);
        let init = self.value(sc, &t);
        let kw = if self.r.gen_bool(0.7) { "var" } else { "alloc" };
        let p = self.def(sc, Ty::Ptr(Box::new(t.clone())), format!("{} {} {}", kw, t, init));
        let x = self.value(sc, &t);
        self.line(format!("st {}* {}, {}", t, p, x));
        self.def(sc, t.clone(), format!("ld {}* {}", t, p));
        if kw == "alloc" {
            self.line(format!("free {}* {}", t, p));
        }
    }

    fn gen_function(&mut self, idx: usize) {
        let name = format!("f{}", idx);
        let ins: Vec<Ty> = (0..self.r.gen_range(0..4)).map(|_| value_ty(&mut self.r, 1)).collect();
        let ret = if self.r.gen_bool(0.2) { None } else { Some(scalar_ty(&mut self.r)) };
        let mut sc = Scope::default();
        let ret_text = ret.clone().map_or("void".to_string(), |t| t.to_string());
        let ps: Vec<String> = ins
            .iter()
            .map(|t| {
                let v = self.fresh();
                sc.vals.push((v.clone(), t.clone()));
                format!("{} {}", t, v)
            })
            .collect();
        self.out += &format!("func @{} ({}) {} {{\n", name, ps.join(", "), ret_text);
        self.block("entry");
        let mut label = 0;
        for _ in 0..self.r.gen_range(0..4) {
            for _ in 0..self.r.gen_range(1..5) {
                self.pure_op(&mut sc);
            }
            match self.r.gen_range(0..4) {
                0 => self.memory(&mut sc),
                1 => self.call(&mut sc),
                _ => {}
            }
            // A diamond joined by a phi, or a counted loop.
            label += 1;
            let c = self.value(&mut sc, &Ty::Int(1));
            let pt = scalar_ty(&mut self.r);
            if self.r.gen_bool(0.6) {
                let (bf, bt, bj) = (format!("f{}", label), format!("t{}", label), format!("j{}", label));
                self.line(format!("br {}, %{}, %{}", c, bf, bt));
                let mut vs = vec![];
                for b in [&bf, &bt] {
                    self.block(b);
                    let mut arm = sc.clone();
                    for _ in 0..self.r.gen_range(0..3) {
                        self.pure_op(&mut arm);
                    }
                    vs.push(self.value(&mut arm, &pt));
                    self.line(format!("br %{}", bj));
                }
                self.block(&bj);
                self.def(&mut sc, pt.clone(), format!("phi {} [{}, %{}], [{}, %{}]", pt, vs[0], bf, vs[1], bt));
            } else {
                let (pre, head, body, exit) = (
                    format!("p{}", label),
                    format!("h{}", label),
                    format!("l{}", label),
                    format!("x{}", label),
                );
                let t = Ty::Int(8);
                let start = self.value(&mut sc, &t);
                let limit = self.value(&mut sc, &t);
                self.line(format!("br %{}", pre));
                self.block(&pre);
                self.line(format!("br %{}", head));
                self.block(&head);
                let i = self.fresh();
                let next = self.fresh();
                self.line(format!("{} = phi {} [{}, %{}], [{}, %{}]", i, t, start, pre, next, body));
                sc.vals.push((i.clone(), t.clone()));
                let more = self.def(&mut sc, Ty::Int(1), format!("ult {} {}, {}", t, i, limit));
                self.line(format!("br {}, %{}, %{}", more, exit, body));
                self.block(&body);
                let one = self.constant(&mut sc.clone(), &t);
                self.line(format!("{} = add {} {}, {}", next, t, i, one));
                self.line(format!("br %{}", head));
                self.block(&exit);
            }
        }
        match &ret {
            Some(t) => {
                let v = self.value(&mut sc, t);
                self.line(format!("ret {} {}", t, v));
            }
            None => self.line("ret".into()),
        }
        self.out += "}\n\n";
        self.funcs.push(UnitSig {
            name,
            inputs: ins,
            outputs: vec![],
            ret: Some(ret.unwrap_or(Ty::Int(0))),
        });
    }

    fn signal_tys(&mut self, n: usize) -> Vec<Ty> {
        (0..n).map(|_| Ty::Sig(Box::new(value_ty(&mut self.r, 1)))).collect()
    }

    fn drive(&mut self, sc: &mut Scope, s: &str, st: &Ty) {
        let inner = match st {
            Ty::Sig(t) => (**t).clone(),
            _ => unreachable!(),
        };
        let v = self.value(sc, &inner);
        let d = self.value(sc, &Ty::Time);
        if self.r.gen_bool(0.3) {
            let c = self.value(sc, &Ty::Int(1));
            self.line(format!("drv {} {}, {}, {} if {}", st, s, v, d, c));
        } else {
            self.line(format!("drv {} {}, {}, {}", st, s, v, d));
        }
    }

    fn probe(&mut self, sc: &mut Scope) {
        let sigs = sc.any_where(|t| matches!(t, Ty::Sig(_)));
        if let Some((s, st)) = sigs.choose(&mut self.r).cloned() {
            let inner = match &st {
                Ty::Sig(t) => (**t).clone(),
                _ => unreachable!(),
            };
            self.def(sc, inner, format!("prb {} {}", st, s));
        }
    }

    fn gen_process(&mut self, idx: usize) {
        let name = format!("p{}", idx);
        let ni = self.r.gen_range(0..3);
        let no = self.r.gen_range(0..3);
        let ins = self.signal_tys(ni);
        let outs = self.signal_tys(no);
        let mut sc = Scope::default();
        self.header("proc", &name, &ins, &outs, None, &mut sc);
        let sigs: Vec<(String, Ty)> = sc.vals.clone();
        let nblocks = self.r.gen_range(1..4);
        for b in 0..nblocks {
            self.block(&format!("s{}", b));
            let mut local = sc.clone();
            for _ in 0..self.r.gen_range(0..4) {
                match self.r.gen_range(0..4) {
                    0 => self.probe(&mut local),
                    1 => {
                        if let Some((s, st)) = sigs[ni..].choose(&mut self.r).cloned() {
                            self.drive(&mut local, &s, &st);
                        }
                    }
                    _ => self.pure_op(&mut local),
                }
            }
            let next = format!("%s{}", (b + 1) % nblocks);
            let mut observed: Vec<String> = sigs.iter().map(|(s, _)| s.clone()).collect();
            observed.shuffle(&mut self.r);
            observed.truncate(self.r.gen_range(0..=observed.len()));
            let obs: String = observed.iter().map(|s| format!(", {}", s)).collect();
            match self.r.gen_range(0..5) {
                0 if b + 1 == nblocks => self.line("halt".into()),
                1 => {
                    let t = self.value(&mut local, &Ty::Time);
                    self.line(format!("wait {} for {}{}", next, t, obs))
                }
                _ => self.line(format!("wait {}{}", next, obs)),
            }
        }
        self.out += "}\n\n";
        self.comps.push(UnitSig {
            name,
            inputs: ins,
            outputs: outs,
            ret: None,
        });
    }

    fn signal(&mut self, sc: &mut Scope, t: &Ty) -> String {
        let init = self.value(sc, t);
        let st = Ty::Sig(Box::new(t.clone()));
        self.def(sc, st.clone(), format!("sig {} {}", t, init))
    }

    fn signal_of(&mut self, sc: &mut Scope, st: &Ty) -> String {
        let have = sc.of(st);
        if !have.is_empty() && self.r.gen_bool(0.6) {
            return have.choose(&mut self.r).unwrap().clone();
        }
        match st {
            Ty::Sig(t) => self.signal(sc, t),
            _ => unreachable!(),
        }
    }

    fn gen_entity(&mut self, idx: usize) {
        let name = format!("e{}", idx);
        let ni = self.r.gen_range(0..3);
        let no = self.r.gen_range(0..3);
        let ins = self.signal_tys(ni);
        let outs = self.signal_tys(no);
        let mut sc = Scope::default();
        self.header("entity", &name, &ins, &outs, None, &mut sc);
        let outs_named: Vec<(String, Ty)> = sc.vals[ni..].to_vec();
        for _ in 0..self.r.gen_range(0..10) {
            match self.r.gen_range(0..10) {
                0 => {
                    let t = value_ty(&mut self.r, 1);
                    self.signal(&mut sc, &t);
                }
                1 => self.probe(&mut sc),
                2 => {
                    if let Some((s, st)) = outs_named.choose(&mut self.r).cloned() {
                        self.drive(&mut sc, &s, &st);
                    }
                }
                3 => {
                    if let Some((s, st)) = outs_named.choose(&mut self.r).cloned() {
                        let inner = match &st {
                            Ty::Sig(t) => (**t).clone(),
                            _ => unreachable!(),
                        };
                        let mut trigs = vec![];
                        for _ in 0..self.r.gen_range(1..3) {
                            let v = self.value(&mut sc, &inner);
                            let mode = *["low", "high", "rise", "fall", "both"].choose(&mut self.r).unwrap();
                            let t = self.value(&mut sc, &Ty::Int(1));
                            let mut tr = format!("[{}, {} {}", v, mode, t);
                            if self.r.gen_bool(0.5) {
                                tr += &format!(" after {}", self.value(&mut sc, &Ty::Time));
                            }
                            if self.r.gen_bool(0.3) {
                                tr += &format!(" if {}", self.value(&mut sc, &Ty::Int(1)));
                            }
                            trigs.push(tr + "]");
                        }
                        self.line(format!("reg {} {}, {}", st, s, trigs.join(", ")));
                    }
                }
                4 => {
                    let t = scalar_ty(&mut self.r);
                    let st = Ty::Sig(Box::new(t));
                    let a = self.signal_of(&mut sc, &st);
                    let d = self.value(&mut sc, &Ty::Time);
                    self.def(&mut sc, st.clone(), format!("del {} {}, {}", st, a, d));
                }
                5 => {
                    let t = scalar_ty(&mut self.r);
                    let st = Ty::Sig(Box::new(t));
                    let a = self.signal_of(&mut sc, &st);
                    let b = self.signal_of(&mut sc, &st);
                    self.line(format!("con {} {}, {}", st, a, b));
                }
                6 if !self.comps.is_empty() => {
                    let i = self.r.gen_range(0..self.comps.len());
                    let (cn, ci, co) = {
                        let c = &self.comps[i];
                        (c.name.clone(), c.inputs.clone(), c.outputs.clone())
                    };
                    let a: Vec<String> = ci.iter().map(|t| self.signal_of(&mut sc, t)).collect();
                    let b: Vec<String> = co.iter().map(|t| self.signal_of(&mut sc, t)).collect();
                    self.line(format!("inst @{} ({}) -> ({})", cn, a.join(", "), b.join(", ")));
                }
                _ => self.pure_op(&mut sc),
            }
        }
        self.out += "}\n\n";
        self.comps.push(UnitSig {
            name,
            inputs: ins,
            outputs: outs,
            ret: None,
        });
    }

    fn gen_declaration(&mut self, idx: usize) {
        if self.r.gen_bool(0.5) {
            let name = format!("xf{}", idx);
            let ins: Vec<Ty> = (0..self.r.gen_range(0..3)).map(|_| scalar_ty(&mut self.r)).collect();
            let ret = scalar_ty(&mut self.r);
            let list: Vec<String> = ins.iter().map(|t| t.to_string()).collect();
            self.out += &format!("declare @{} ({}) {}\n\n", name, list.join(", "), ret);
            self.funcs.push(UnitSig {
                name,
                inputs: ins,
                outputs: vec![],
                ret: Some(ret),
            });
        } else {
            let name = format!("xc{}", idx);
            let (ni, no) = (self.r.gen_range(0..3), self.r.gen_range(0..3));
            let ins = self.signal_tys(ni);
            let outs = self.signal_tys(no);
            let l = |v: &[Ty]| v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
            self.out += &format!("declare @{} ({}) -> ({})\n\n", name, l(&ins), l(&outs));
            self.comps.push(UnitSig {
                name,
                inputs: ins,
                outputs: outs,
                ret: None,
            });
        }
    }

    /// A module of a few random units; every use refers to an earlier
    /// definition so the result also verifies.
    pub fn module(mut self) -> String {
        for i in 0..self.r.gen_range(1..6) {
            match self.r.gen_range(0..7) {
                0 => self.gen_declaration(i),
                1 | 2 => self.gen_function(i),
                3 | 4 => self.gen_process(i),
                _ => self.gen_entity(i),
            }
        }
        self.out
    }
}

// ---------------------------------------------------------------------------
// Two-region processes for lowering equivalence

#[derive(Clone, Copy, Debug)]
enum Edge {
    Rise,
    Fall,
    Both,
}

/// A clocked or latched process of the shape
/// `%init: prb...; wait %check, ... / %check: ...; drv ...; br %init`
/// with random edge and level conditions over at most three control
/// signals `%s0..`, a data input `%d`, and one or two outputs.
pub struct TwoRegion {
    pub text: String,
    pub controls: usize,
    pub outputs: usize,
}

pub fn random_two_region(r: &mut Rand) -> TwoRegion {
    let controls = r.gen_range(1..=3);
    let outputs = r.gen_range(1..=2);
    let mut pre = String::new();
    let mut body = String::new();
    let mut n = 0;
    let mut fresh = |p: &str| {
        n += 1;
        format!("%{}{}", p, n)
    };
    let mut past_used = vec![false; controls];
    let mut present_used = vec![false; controls];
    let mut tail = String::new();
    let mut conds = vec![];
    for _ in 0..outputs {
        let mut terms = vec![];
        for _ in 0..r.gen_range(1..=2) {
            let mut lits = vec![];
            let edge_sig = if r.gen_bool(0.7) { Some(r.gen_range(0..controls)) } else { None };
            if let Some(s) = edge_sig {
                past_used[s] = true;
                present_used[s] = true;
                let e = *[Edge::Rise, Edge::Fall, Edge::Both].choose(r).unwrap();
                let t = fresh("e");
                match e {
                    Edge::Rise => {
                        let nv = fresh("n");
                        body += &format!("  {} = not i1 %s{}_0\n", nv, s);
                        body += &format!("  {} = and i1 {}, %s{}_1\n", t, nv, s);
                    }
                    Edge::Fall => {
                        let nv = fresh("n");
                        body += &format!("  {} = not i1 %s{}_1\n", nv, s);
                        body += &format!("  {} = and i1 %s{}_0, {}\n", t, s, nv);
                    }
                    Edge::Both => body += &format!("  {} = neq i1 %s{}_0, %s{}_1\n", t, s, s),
                }
                lits.push(t);
            }
            let others: Vec<usize> = (0..controls).filter(|&s| Some(s) != edge_sig).collect();
            let nlev = if edge_sig.is_some() { r.gen_range(0..=1) } else { r.gen_range(1..=2) };
            for &s in others.choose_multiple(r, nlev) {
                present_used[s] = true;
                if r.gen_bool(0.5) {
                    lits.push(format!("%s{}_1", s));
                } else {
                    let nv = fresh("n");
                    body += &format!("  {} = not i1 %s{}_1\n", nv, s);
                    lits.push(nv);
                }
            }
            if lits.is_empty() {
                // Level term on a single signal.
                present_used[0] = true;
                lits.push("%s0_1".into());
            }
            let mut acc = lits[0].clone();
            for l in &lits[1..] {
                let t = fresh("a");
                body += &format!("  {} = and i1 {}, {}\n", t, acc, l);
                acc = t;
            }
            terms.push(acc);
        }
        let mut cond = terms[0].clone();
        for t in &terms[1..] {
            let v = fresh("o");
            body += &format!("  {} = or i1 {}, {}\n", v, cond, t);
            cond = v;
        }
        let value = match r.gen_range(0..3) {
            0 => "%dp".to_string(),
            1 => {
                let k = fresh("k");
                let v = fresh("v");
                body += &format!("  {} = const i8 {}\n", k, r.gen_range(0..256));
                body += &format!("  {} = add i8 %dp, {}\n", v, k);
                v
            }
            _ => {
                let k = fresh("k");
                let v = fresh("v");
                body += &format!("  {} = const i8 {}\n", k, r.gen_range(0..256));
                body += &format!("  {} = xor i8 %dp, {}\n", v, k);
                let w = fresh("w");
                body += &format!("  {} = mux i8 [%dp, {}], %s0_1\n", w, v);
                present_used[0] = true;
                w
            }
        };
        let delay = if r.gen_bool(0.5) { "%eps" } else { "%ns" };
        conds.push((cond, value, delay));
    }
    // Half of the processes express conditions through control flow.
    let branchy = r.gen_bool(0.5);
    for (o, (cond, value, delay)) in conds.iter().enumerate() {
        if branchy {
            tail += &format!("  br {}, %skip{}, %do{}\n", cond, o, o);
            tail += &format!("%do{}:\n  drv i8$ %q{}, {}, {}\n  br %skip{}\n%skip{}:\n", o, o, value, delay, o, o);
        } else {
            tail += &format!("  drv i8$ %q{}, {}, {} if {}\n", o, value, delay, cond);
        }
    }
    tail += "  br %init\n";

    let mut waits = vec!["%d".to_string()];
    let mut probes = String::new();
    for s in 0..controls {
        if past_used[s] {
            pre += &format!("  %s{}_0 = prb i1$ %s{}\n", s, s);
        }
        if present_used[s] || past_used[s] {
            probes += &format!("  %s{}_1 = prb i1$ %s{}\n", s, s);
            waits.push(format!("%s{}", s));
        }
    }
    let ins: Vec<String> = (0..controls).map(|s| format!("i1$ %s{}", s)).collect();
    let outs: Vec<String> = (0..outputs).map(|o| format!("i8$ %q{}", o)).collect();
    let text = format!(
        "proc @dut ({}, i8$ %d) -> ({}) {{\n%init:\n{}  wait %check, {}\n%check:\n{}  %dp = prb i8$ %d\n  %eps = const time 0s 1e\n  %ns = const time 1ns\n{}{}}}\n",
        ins.join(", "),
        outs.join(", "),
        pre,
        waits.join(", "),
        probes,
        body,
        tail
    );
    TwoRegion { text, controls, outputs }
}

/// Testbench entity instantiating `@dut` with fresh signals.
pub fn two_region_bench(p: &TwoRegion) -> String {
    let mut s = String::from("entity @tb () -> () {\n  %f = const i1 0\n  %z = const i8 0\n");
    for i in 0..p.controls {
        s += &format!("  %s{} = sig i1 %f\n", i);
    }
    s += "  %d = sig i8 %z\n";
    for o in 0..p.outputs {
        s += &format!("  %q{} = sig i8 %z\n", o);
    }
    let ins: Vec<String> = (0..p.controls).map(|i| format!("%s{}", i)).collect();
    let outs: Vec<String> = (0..p.outputs).map(|o| format!("%q{}", o)).collect();
    s += &format!("  inst @dut ({}, %d) -> ({})\n}}\n", ins.join(", "), outs.join(", "));
    s
}

/// Input signal of a testbench with its width.
pub type Input = (String, usize);

/// Random stimulus: every 10ns each input changes with probability 1/2,
/// and half of the cycles get a second change 5ns in.
pub fn stimulus(r: &mut Rand, inputs: &[Input], cycles: u64) -> Vec<(String, Val, TimeValue)> {
    let mut out = vec![];
    for c in 0..cycles {
        for half in 0..2 {
            if half == 1 && r.gen_bool(0.5) {
                continue;
            }
            for (name, w) in inputs {
                if r.gen_bool(0.5) {
                    let v = if *w >= 64 { r.gen::<u64>() } else { r.gen_range(0..(1u64 << w)) };
                    out.push((name.clone(), Val::int(*w, v), ns(c * 10 + half * 5)));
                }
            }
        }
    }
    out
}

/// Simulate `top` under `stim` and render the full trace.
pub fn run_with(m: &Module, top: &str, stim: &[(String, Val, TimeValue)]) -> (String, Summary, Vec<String>) {
    let mut s = elaborate(m, &UnitName::global(top)).unwrap_or_else(|e| panic!("{}", e));
    for (n, v, t) in stim {
        s.drive_external(n, v, *t).unwrap_or_else(|e| panic!("{}", e));
    }
    let summary = s.run(None).unwrap_or_else(|e| panic!("{}", e));
    let names = s.signal_names();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    (s.trace().render(&refs), summary, names)
}

/// Traces of `top` before and after lowering to level 2, plus the lowered
/// module.
pub fn lowered_traces(m: &Module, top: &str, stim: &[(String, Val, TimeValue)]) -> (String, String, Module) {
    let mut l = m.clone();
    let report = lower_module(&mut l, 2).unwrap();
    assert!(report.rejections.is_empty(), "{}", report.render());
    let (a, _, na) = run_with(m, top, stim);
    let (b, _, nb) = run_with(&l, top, stim);
    assert_eq!(na, nb, "signal sets differ");
    (a, b, l)
}
pub mod oracle;
