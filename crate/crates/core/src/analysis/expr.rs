//! Boolean expressions over IR values, their disjunctive normal form, and
//! branch condition chains.

use super::cfg::Cfg;
use super::tr::TemporalRegionMap;
use crate::ir::{ConstValue, Extra, Inst, InstData, Opcode, Type, UnitData, Value};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// An opaque boolean leaf.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    /// An `i1` value.
    Value(Value),
    /// Equality of two wider values; operands are kept in ascending order so
    /// `eq a, b` and `neq b, a` share one atom.
    Eq(Value, Value),
}

impl Atom {
    pub fn eq(a: Value, b: Value) -> Atom {
        if a <= b {
            Atom::Eq(a, b)
        } else {
            Atom::Eq(b, a)
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Atom::Value(v) => write!(f, "{}", v),
            Atom::Eq(a, b) => write!(f, "({} == {})", a, b),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BoolExpr {
    Const(bool),
    Atom(Atom),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn atom(v: Value) -> BoolExpr {
        BoolExpr::Atom(Atom::Value(v))
    }

    /// Negation with constant folding and double-negation removal.
    pub fn not(e: BoolExpr) -> BoolExpr {
        match e {
            BoolExpr::Const(c) => BoolExpr::Const(!c),
            BoolExpr::Not(inner) => *inner,
            e => BoolExpr::Not(Box::new(e)),
        }
    }

    /// Conjunction with flattening and constant folding.
    pub fn and(parts: Vec<BoolExpr>) -> BoolExpr {
        let mut out = vec![];
        for p in parts {
            match p {
                BoolExpr::Const(true) => {}
                BoolExpr::Const(false) => return BoolExpr::Const(false),
                BoolExpr::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        out.dedup();
        match out.len() {
            0 => BoolExpr::Const(true),
            1 => out.pop().unwrap(),
            _ => BoolExpr::And(out),
        }
    }

    /// Disjunction with flattening and constant folding.
    pub fn or(parts: Vec<BoolExpr>) -> BoolExpr {
        let mut out = vec![];
        for p in parts {
            match p {
                BoolExpr::Const(false) => {}
                BoolExpr::Const(true) => return BoolExpr::Const(true),
                BoolExpr::Or(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        out.dedup();
        match out.len() {
            0 => BoolExpr::Const(false),
            1 => out.pop().unwrap(),
            _ => BoolExpr::Or(out),
        }
    }

    pub fn xor(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        match (a, b) {
            (BoolExpr::Const(x), e) | (e, BoolExpr::Const(x)) => {
                if x {
                    BoolExpr::not(e)
                } else {
                    e
                }
            }
            (a, b) => BoolExpr::Xor(Box::new(a), Box::new(b)),
        }
    }

    pub fn eval(&self, assign: &dyn Fn(&Atom) -> bool) -> bool {
        match self {
            BoolExpr::Const(c) => *c,
            BoolExpr::Atom(a) => assign(a),
            BoolExpr::Not(e) => !e.eval(assign),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(assign)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(assign)),
            BoolExpr::Xor(a, b) => a.eval(assign) != b.eval(assign),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Atom(a) => {
                out.insert(*a);
            }
            BoolExpr::Not(e) => e.collect_atoms(out),
            BoolExpr::And(es) | BoolExpr::Or(es) => es.iter().for_each(|e| e.collect_atoms(out)),
            BoolExpr::Xor(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Replace the expression by a constant if it is one under every
    /// assignment. Only attempted for up to 12 atoms.
    pub fn simplify(self) -> BoolExpr {
        let atoms: Vec<Atom> = self.atoms().into_iter().collect();
        if atoms.is_empty() || atoms.len() > 12 {
            return self;
        }
        let mut seen = [false; 2];
        for bits in 0u32..(1 << atoms.len()) {
            let r = self.eval(&|a| {
                let i = atoms.iter().position(|x| x == a).unwrap();
                bits >> i & 1 == 1
            });
            seen[r as usize] = true;
            if seen[0] && seen[1] {
                return self;
            }
        }
        BoolExpr::Const(seen[1])
    }

    pub fn to_dnf(&self) -> Dnf {
        to_dnf(self)
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let join = |f: &mut fmt::Formatter, es: &[BoolExpr], op: &str| {
            write!(f, "(")?;
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, " {} ", op)?;
                }
                write!(f, "{}", e)?;
            }
            write!(f, ")")
        };
        match self {
            BoolExpr::Const(c) => write!(f, "{}", c),
            BoolExpr::Atom(a) => write!(f, "{}", a),
            BoolExpr::Not(e) => write!(f, "!{}", e),
            BoolExpr::And(es) => join(f, es, "&"),
            BoolExpr::Or(es) => join(f, es, "|"),
            BoolExpr::Xor(a, b) => write!(f, "({} ^ {})", a, b),
        }
    }
}

/// A possibly negated atom.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn negated(self) -> Literal {
        Literal {
            atom: self.atom,
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// A disjunction of conjunctive terms. Terms are sorted literal lists; the
/// term list itself is sorted. No term contains an atom in both polarities,
/// and no term is a superset of another. An empty term list is `false`; a
/// list holding one empty term is `true`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dnf {
    pub terms: Vec<Vec<Literal>>,
}

impl Dnf {
    pub fn falsum() -> Dnf {
        Dnf { terms: vec![] }
    }

    pub fn verum() -> Dnf {
        Dnf { terms: vec![vec![]] }
    }

    pub fn literal(l: Literal) -> Dnf {
        Dnf { terms: vec![vec![l]] }
    }

    pub fn is_false(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.terms.iter().any(|t| t.is_empty())
    }

    pub fn eval(&self, assign: &dyn Fn(&Atom) -> bool) -> bool {
        self.terms
            .iter()
            .any(|t| t.iter().all(|l| assign(&l.atom) == l.positive))
    }

    fn from_terms(terms: Vec<Vec<Literal>>) -> Dnf {
        let mut clean: Vec<Vec<Literal>> = terms
            .into_iter()
            .filter_map(|mut t| {
                t.sort();
                t.dedup();
                let contradictory = t
                    .windows(2)
                    .any(|w| w[0].atom == w[1].atom && w[0].positive != w[1].positive);
                (!contradictory).then_some(t)
            })
            .collect();
        clean.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        clean.dedup();
        // Absorption: drop any term that contains a shorter kept term.
        let mut kept: Vec<Vec<Literal>> = vec![];
        for t in clean {
            if !kept.iter().any(|k| k.iter().all(|l| t.binary_search(l).is_ok())) {
                kept.push(t);
            }
        }
        kept.sort();
        Dnf { terms: kept }
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        Dnf::from_terms(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn and(&self, other: &Dnf) -> Dnf {
        let mut terms = vec![];
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.iter().chain(b).copied().collect());
            }
        }
        Dnf::from_terms(terms)
    }

    /// Expression form, for emission into the IR.
    pub fn to_expr(&self) -> BoolExpr {
        BoolExpr::or(
            self.terms
                .iter()
                .map(|t| {
                    BoolExpr::and(
                        t.iter()
                            .map(|l| {
                                let a = BoolExpr::Atom(l.atom);
                                if l.positive {
                                    a
                                } else {
                                    BoolExpr::not(a)
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if self.is_false() {
            return write!(f, "false");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if t.is_empty() {
                write!(f, "true")?;
            }
            for (j, l) in t.iter().enumerate() {
                if j > 0 {
                    write!(f, " & ")?;
                }
                write!(f, "{}", l)?;
            }
        }
        Ok(())
    }
}

/// Convert to DNF by pushing negations to the atoms and distributing.
pub fn to_dnf(e: &BoolExpr) -> Dnf {
    dnf_of(e, true)
}

fn dnf_of(e: &BoolExpr, positive: bool) -> Dnf {
    match e {
        BoolExpr::Const(c) => {
            if *c == positive {
                Dnf::verum()
            } else {
                Dnf::falsum()
            }
        }
        BoolExpr::Atom(a) => Dnf::literal(Literal {
            atom: *a,
            positive,
        }),
        BoolExpr::Not(inner) => dnf_of(inner, !positive),
        BoolExpr::And(es) | BoolExpr::Or(es) => {
            // Under negation, De Morgan swaps the connective.
            let conj = matches!(e, BoolExpr::And(_)) == positive;
            let mut acc = if conj { Dnf::verum() } else { Dnf::falsum() };
            for sub in es {
                let d = dnf_of(sub, positive);
                acc = if conj { acc.and(&d) } else { acc.or(&d) };
            }
            acc
        }
        BoolExpr::Xor(a, b) => {
            // a ^ b = (a & !b) | (!a & b); !(a ^ b) = (a & b) | (!a & !b)
            let (pa, na) = (dnf_of(a, true), dnf_of(a, false));
            let (pb, nb) = (dnf_of(b, true), dnf_of(b, false));
            if positive {
                pa.and(&nb).or(&na.and(&pb))
            } else {
                pa.and(&pb).or(&na.and(&nb))
            }
        }
    }
}

/// Build the boolean expression computed by an `i1` value, looking through
/// `and`, `or`, `xor`, `not`, `eq`, `neq`, and `i1` constants. Anything else
/// becomes an opaque atom.
pub fn expr_of_value(unit: &UnitData, v: Value) -> BoolExpr {
    let mut memo = HashMap::new();
    expr_rec(unit, v, &mut memo)
}

fn expr_rec(unit: &UnitData, v: Value, memo: &mut HashMap<Value, BoolExpr>) -> BoolExpr {
    if let Some(e) = memo.get(&v) {
        return e.clone();
    }
    let e = match unit.def_inst(v).filter(|&i| unit.inst_block(i).is_some()) {
        None => BoolExpr::atom(v),
        Some(inst) => {
            let d = unit.inst_data(inst);
            let bool_ty = d.ty == Type::Int(1);
            let mut sub = |i: usize| expr_rec(unit, d.args[i], memo);
            match d.opcode {
                Opcode::Const if bool_ty => match d.const_value() {
                    Some(ConstValue::Int(x)) => BoolExpr::Const(x.bits() > 0),
                    _ => BoolExpr::atom(v),
                },
                Opcode::Not if bool_ty => BoolExpr::not(sub(0)),
                Opcode::And if bool_ty => BoolExpr::and(vec![sub(0), sub(1)]),
                Opcode::Or if bool_ty => BoolExpr::or(vec![sub(0), sub(1)]),
                Opcode::Xor if bool_ty => BoolExpr::xor(sub(0), sub(1)),
                Opcode::Eq | Opcode::Neq => {
                    let e = if bool_ty {
                        BoolExpr::not(BoolExpr::xor(sub(0), sub(1)))
                    } else if matches!(d.ty, Type::Int(_) | Type::Enum(_)) {
                        BoolExpr::Atom(Atom::eq(d.args[0], d.args[1]))
                    } else {
                        // Logic and aggregate comparisons are not boolean
                        // complements of each other in the presence of
                        // unknown digits; keep the result opaque.
                        BoolExpr::atom(v)
                    };
                    if d.opcode == Opcode::Neq && !matches!(e, BoolExpr::Atom(Atom::Value(x)) if x == v) {
                        BoolExpr::not(e)
                    } else {
                        e
                    }
                }
                _ => BoolExpr::atom(v),
            }
        }
    };
    memo.insert(v, e.clone());
    e
}

/// The condition under which control reaching `from` goes on to reach `to`
/// within the same temporal region.
///
/// Edges into the region head and edges leaving the region are not followed.
/// Fails if `to` is not reachable that way or if the region contains a loop
/// that does not pass through its head.
pub fn condition_chain(
    unit: &UnitData,
    cfg: &Cfg,
    trs: &TemporalRegionMap,
    from: crate::ir::Block,
    to: crate::ir::Block,
) -> Result<BoolExpr, String> {
    let tr = trs
        .tr_of(from)
        .ok_or_else(|| "condition chain from an unreachable block".to_string())?;
    if trs.tr_of(to) != Some(tr) {
        return Err("condition chain crosses a temporal region boundary".into());
    }
    if from == to {
        return Ok(BoolExpr::Const(true));
    }
    let region = trs.region(tr);
    let order: HashMap<_, _> = region.blocks.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut cond: HashMap<crate::ir::Block, BoolExpr> = HashMap::new();
    cond.insert(from, BoolExpr::Const(true));
    for &b in &region.blocks[order[&from] + 1..] {
        let mut incoming = vec![];
        for &p in cfg.preds(b) {
            let pi = match order.get(&p) {
                Some(&i) => i,
                None => continue,
            };
            if b == region.head {
                continue;
            }
            if pi >= order[&b] {
                return Err("loop inside a temporal region".into());
            }
            let pc = match cond.get(&p) {
                Some(c) => c.clone(),
                None => continue,
            };
            let term = unit.terminator(p).expect("predecessor has a terminator");
            let d = unit.inst_data(term);
            let edge = match d.opcode {
                Opcode::BrCond if d.blocks[0] != d.blocks[1] => {
                    let c = BoolExpr::atom(d.args[0]);
                    if d.blocks[1] == b {
                        c
                    } else {
                        BoolExpr::not(c)
                    }
                }
                Opcode::Wait => continue,
                _ => BoolExpr::Const(true),
            };
            incoming.push(BoolExpr::and(vec![pc, edge]));
        }
        if !incoming.is_empty() {
            cond.insert(b, BoolExpr::or(incoming).simplify());
        }
        if b == to {
            break;
        }
    }
    cond.remove(&to)
        .ok_or_else(|| format!("block is not reachable from its dominator within the region"))
}

/// Where [`emit_expr`] places instructions.
#[derive(Clone, Copy, Debug)]
pub struct InsertPoint {
    pub block: crate::ir::Block,
    pub pos: usize,
}

fn emit_inst(unit: &mut UnitData, at: &mut InsertPoint, data: InstData) -> Value {
    let i: Inst = unit.create_inst(data);
    unit.insert_inst_at(at.block, at.pos, i);
    at.pos += 1;
    unit.inst_result(i).unwrap()
}

/// Materialize an expression as `i1` instructions at `at`, advancing it.
pub fn emit_expr(unit: &mut UnitData, at: &mut InsertPoint, e: &BoolExpr) -> Value {
    let b = Type::Int(1);
    match e {
        BoolExpr::Const(c) => emit_inst(
            unit,
            at,
            InstData::new(Opcode::Const, b, vec![])
                .with_extra(Extra::Const(ConstValue::Int((*c as u32).into()))),
        ),
        BoolExpr::Atom(Atom::Value(v)) => *v,
        BoolExpr::Atom(Atom::Eq(x, y)) => {
            let ty = unit.value_type(*x).clone();
            emit_inst(unit, at, InstData::new(Opcode::Eq, ty, vec![*x, *y]))
        }
        BoolExpr::Not(inner) => {
            let v = emit_expr(unit, at, inner);
            emit_inst(unit, at, InstData::new(Opcode::Not, b, vec![v]))
        }
        BoolExpr::And(es) | BoolExpr::Or(es) => {
            let op = if matches!(e, BoolExpr::And(_)) {
                Opcode::And
            } else {
                Opcode::Or
            };
            let mut acc = emit_expr(unit, at, &es[0]);
            for sub in &es[1..] {
                let v = emit_expr(unit, at, sub);
                acc = emit_inst(unit, at, InstData::new(op, b.clone(), vec![acc, v]));
            }
            acc
        }
        BoolExpr::Xor(x, y) => {
            let a = emit_expr(unit, at, x);
            let c = emit_expr(unit, at, y);
            emit_inst(unit, at, InstData::new(Opcode::Xor, b, vec![a, c]))
        }
    }
}
