//! Parser for the text format.

use super::lexer::{tokenize, Tok};
use crate::diag::{Diagnostic, Span};
use crate::ir::{
    Block, ConstValue, Declaration, Extra, Inst, InstData, LogicDigit, Module, Opcode, RegMode,
    RegTriggerRef, Signature, TimeValue, Type, UnitData, UnitId, UnitKind, UnitName, Value,
};
use crate::ir::time::TIME_UNITS;
use num_bigint::BigUint;
use num_traits::One;
use std::collections::HashMap;

/// Source positions of units and instructions of a parsed module.
#[derive(Clone, Debug, Default)]
pub struct Locations {
    pub units: HashMap<UnitId, Span>,
    pub insts: HashMap<(UnitId, Inst), Span>,
}

/// Parse a module from text.
pub fn parse_module(text: &str) -> Result<Module, Vec<Diagnostic>> {
    parse_module_with_locations(text).map(|(m, _)| m)
}

/// Parse a module and keep the source positions of its units and
/// instructions for later diagnostics.
pub fn parse_module_with_locations(text: &str) -> Result<(Module, Locations), Vec<Diagnostic>> {
    let toks = tokenize(text).map_err(|d| vec![d])?;
    let mut p = Parser {
        toks,
        pos: 0,
        module: Module::new(),
        locs: Locations::default(),
    };
    p.parse_all()?;
    Ok((p.module, p.locs))
}

/// Parse a standalone time literal such as `100ns` or `0s 1d 2e`.
pub fn parse_time_literal(text: &str) -> Result<TimeValue, Diagnostic> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        module: Module::new(),
        locs: Locations::default(),
    };
    let t = p.parse_time()?;
    if *p.peek() != Tok::Eof {
        return Err(Diagnostic::error(Some(p.span()), "trailing input after time literal"));
    }
    Ok(t)
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    module: Module,
    locs: Locations,
}

/// Per-unit name bookkeeping. Operands are parsed into placeholder handles
/// that index `value_uses`/`block_uses` and are resolved once the whole unit
/// has been read, which allows forward references.
#[derive(Default)]
struct Scope {
    values: HashMap<String, Value>,
    value_uses: Vec<(String, Span)>,
    blocks: HashMap<String, Block>,
    block_uses: Vec<(String, Span)>,
}

impl Scope {
    fn use_value(&mut self, name: String, span: Span) -> Value {
        self.value_uses.push((name, span));
        Value(self.value_uses.len() as u32 - 1)
    }

    fn use_block(&mut self, name: String, span: Span) -> Block {
        self.block_uses.push((name, span));
        Block(self.block_uses.len() as u32 - 1)
    }
}

fn is_anonymous(name: &str) -> bool {
    name.bytes().all(|b| b.is_ascii_digit())
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(Some(self.span()), msg))
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.err(format!("expected {}, found {}", what, self.peek().describe()))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.expected(&t.describe())
        }
    }

    fn eat_ident(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn local(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Local(n) => {
                let s = self.bump().1;
                Ok((n, s))
            }
            _ => self.expected("a local name"),
        }
    }

    fn usize_lit(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Int(s) if !s.starts_with('-') => match s.parse() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.err("number too large"),
            },
            _ => self.expected("a non-negative integer"),
        }
    }

    fn parse_all(&mut self) -> Result<(), Vec<Diagnostic>> {
        loop {
            let res = match self.peek().clone() {
                Tok::Eof => return Ok(()),
                Tok::Ident(kw) if kw == "declare" => self.parse_declaration().map_err(|e| vec![e]),
                Tok::Ident(kw) if kw == "func" || kw == "proc" || kw == "entity" => self.parse_unit(),
                _ => Err(vec![Diagnostic::error(
                    Some(self.span()),
                    format!(
                        "expected `func`, `proc`, `entity`, or `declare`, found {}",
                        self.peek().describe()
                    ),
                )]),
            };
            res?;
        }
    }

    // ---- types ------------------------------------------------------------

    fn parse_type(&mut self) -> PResult<Type> {
        let span = self.span();
        let mut ty = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "void" => Type::Void,
                    "time" => Type::Time,
                    _ => {
                        let (head, num) = s.split_at(1);
                        let n: Option<usize> = num.parse().ok();
                        match (head, n) {
                            ("i", Some(n)) => Type::Int(n),
                            ("n", Some(n)) => Type::Enum(n),
                            ("l", Some(n)) => Type::Logic(n),
                            _ => {
                                return Err(Diagnostic::error(
                                    Some(span),
                                    format!("unknown type `{}`", s),
                                ))
                            }
                        }
                    }
                }
            }
            Tok::LBracket => {
                self.bump();
                let n = self.usize_lit()?;
                if !self.eat_ident("x") {
                    return self.expected("`x`");
                }
                let elem = self.parse_type()?;
                self.expect(&Tok::RBracket)?;
                Type::array(n, elem)
            }
            Tok::LBrace => {
                self.bump();
                let mut fields = vec![];
                if !self.eat(&Tok::RBrace) {
                    loop {
                        fields.push(self.parse_type()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Type::Struct(fields)
            }
            Tok::LParen => {
                self.bump();
                let mut args = vec![];
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.parse_type()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                let ret = self.parse_type()?;
                Type::Func(args, Box::new(ret))
            }
            _ => return self.expected("a type"),
        };
        loop {
            if self.eat(&Tok::Dollar) {
                ty = Type::signal(ty);
            } else if self.eat(&Tok::Star) {
                ty = Type::pointer(ty);
            } else {
                break;
            }
        }
        ty.validate()
            .map_err(|m| Diagnostic::error(Some(span.to(self.prev_span())), m))?;
        Ok(ty)
    }

    /// `(T %a, T %b)` with optional argument names.
    fn parse_params(&mut self) -> PResult<Vec<(Type, Option<(String, Span)>)>> {
        self.expect(&Tok::LParen)?;
        let mut out = vec![];
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            let ty = self.parse_type()?;
            let name = if matches!(self.peek(), Tok::Local(_)) {
                Some(self.local()?)
            } else {
                None
            };
            out.push((ty, name));
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn parse_unit_name(&mut self) -> PResult<(UnitName, Span)> {
        let span = self.span();
        match self.bump().0 {
            Tok::Global(n) => Ok((UnitName::Global(n), span)),
            Tok::Local(n) => Ok((UnitName::Local(n), span)),
            t => Err(Diagnostic::error(
                Some(span),
                format!("expected a unit name, found {}", t.describe()),
            )),
        }
    }

    fn parse_declaration(&mut self) -> PResult<()> {
        self.bump();
        let (name, _) = self.parse_unit_name()?;
        let ins = self.parse_params()?;
        let inputs = ins.into_iter().map(|(t, _)| t).collect();
        let (sig, function) = if self.eat(&Tok::Arrow) {
            let outs = self.parse_params()?;
            (
                Signature::component(inputs, outs.into_iter().map(|(t, _)| t).collect()),
                false,
            )
        } else {
            (Signature::function(inputs, self.parse_type()?), true)
        };
        self.module.add_declaration(Declaration {
            name,
            sig,
            function,
        });
        Ok(())
    }

    // ---- units ------------------------------------------------------------

    fn parse_unit(&mut self) -> Result<(), Vec<Diagnostic>> {
        let kind = match self.bump().0 {
            Tok::Ident(s) if s == "func" => UnitKind::Function,
            Tok::Ident(s) if s == "proc" => UnitKind::Process,
            _ => UnitKind::Entity,
        };
        let one = |e| vec![e];
        let (name, name_span) = self.parse_unit_name().map_err(one)?;
        let ins = self.parse_params().map_err(one)?;
        let (outs, ret) = if kind == UnitKind::Function {
            (vec![], self.parse_type().map_err(one)?)
        } else {
            self.expect(&Tok::Arrow).map_err(one)?;
            (self.parse_params().map_err(one)?, Type::Void)
        };
        let sig = Signature {
            inputs: ins.iter().map(|(t, _)| t.clone()).collect(),
            outputs: outs.iter().map(|(t, _)| t.clone()).collect(),
            ret,
        };
        let mut unit = UnitData::new(kind, name, sig);
        let mut scope = Scope::default();
        for (i, (_, n)) in ins.iter().chain(outs.iter()).enumerate() {
            if let Some((n, span)) = n {
                let v = unit.arg(i);
                if scope.values.insert(n.clone(), v).is_some() {
                    return Err(vec![Diagnostic::error(
                        Some(*span),
                        format!("`%{}` is defined more than once", n),
                    )]);
                }
                if !is_anonymous(n) {
                    unit.set_value_name(v, n.clone());
                }
            }
        }
        self.expect(&Tok::LBrace).map_err(one)?;
        let mut spans: Vec<(Inst, Span)> = vec![];
        let mut current: Option<Block> = if kind == UnitKind::Entity {
            Some(unit.body())
        } else {
            None
        };
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            // Block label.
            if let (Tok::Local(n), Tok::Colon) = (self.peek().clone(), self.peek_at(1).clone()) {
                let span = self.span();
                if kind == UnitKind::Entity {
                    return Err(vec![Diagnostic::error(
                        Some(span),
                        "entities have no blocks; unexpected label",
                    )]);
                }
                self.bump();
                self.bump();
                let name = if is_anonymous(&n) { None } else { Some(n.clone()) };
                let b = unit.add_block(name);
                if scope.blocks.insert(n.clone(), b).is_some() {
                    return Err(vec![Diagnostic::error(
                        Some(span),
                        format!("block `%{}` is defined more than once", n),
                    )]);
                }
                current = Some(b);
                continue;
            }
            if *self.peek() == Tok::Eof {
                return Err(vec![Diagnostic::error(
                    Some(self.span()),
                    "unexpected end of input; missing `}`",
                )]);
            }
            let block = match current {
                Some(b) => b,
                None => {
                    let b = unit.add_block(None);
                    current = Some(b);
                    b
                }
            };
            let start = self.span();
            let inst = self.parse_inst(&mut unit, &mut scope).map_err(one)?;
            unit.append_inst(block, inst);
            spans.push((inst, start.to(self.prev_span())));
        }
        // Resolve placeholder operands.
        let mut errors = vec![];
        for &(inst, _) in &spans {
            let mut data = unit.inst_data(inst).clone();
            for a in &mut data.args {
                let (n, span) = &scope.value_uses[a.index()];
                match scope.values.get(n) {
                    Some(&v) => *a = v,
                    None => errors.push(Diagnostic::error(
                        Some(*span),
                        format!("use of undefined value `%{}`", n),
                    )),
                }
            }
            for b in &mut data.blocks {
                let (n, span) = &scope.block_uses[b.index()];
                match scope.blocks.get(n) {
                    Some(&x) => *b = x,
                    None => errors.push(Diagnostic::error(
                        Some(*span),
                        format!("use of undefined block `%{}`", n),
                    )),
                }
            }
            *unit.inst_data_mut(inst) = data;
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let id = self.module.add_unit(unit);
        self.locs.units.insert(id, name_span);
        for (inst, span) in spans {
            self.locs.insts.insert((id, inst), span);
        }
        Ok(())
    }

    // ---- instructions -------------------------------------------------------

    fn operand(&mut self, scope: &mut Scope) -> PResult<Value> {
        let (n, s) = self.local()?;
        Ok(scope.use_value(n, s))
    }

    fn block_operand(&mut self, scope: &mut Scope) -> PResult<Block> {
        let (n, s) = self.local()?;
        Ok(scope.use_block(n, s))
    }

    /// Comma-separated operands inside the given delimiters.
    fn operand_list(&mut self, scope: &mut Scope, open: Tok, close: Tok) -> PResult<Vec<Value>> {
        self.expect(&open)?;
        let mut out = vec![];
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.operand(scope)?);
            if self.eat(&close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn parse_inst(&mut self, unit: &mut UnitData, scope: &mut Scope) -> PResult<Inst> {
        let result = if let (Tok::Local(_), Tok::Equals) = (self.peek(), self.peek_at(1)) {
            let r = self.local()?;
            self.bump();
            Some(r)
        } else {
            None
        };
        let op_span = self.span();
        let mnemonic = match self.bump().0 {
            Tok::Ident(s) => s,
            t => {
                return Err(Diagnostic::error(
                    Some(op_span),
                    format!("expected an instruction, found {}", t.describe()),
                ))
            }
        };
        let op = Opcode::from_mnemonic(&mnemonic).ok_or_else(|| {
            Diagnostic::error(Some(op_span), format!("unknown opcode `{}`", mnemonic))
        })?;
        let data = self.parse_operands(op, scope)?;
        let inst = unit.create_inst(data);
        match (result, unit.inst_result(inst)) {
            (Some((n, span)), Some(v)) => {
                if scope.values.insert(n.clone(), v).is_some() {
                    return Err(Diagnostic::error(
                        Some(span),
                        format!("`%{}` is defined more than once", n),
                    ));
                }
                if !is_anonymous(&n) {
                    unit.set_value_name(v, n);
                }
            }
            (Some((_, span)), None) => {
                return Err(Diagnostic::error(
                    Some(span),
                    format!("`{}` produces no value to name", mnemonic),
                ))
            }
            _ => {}
        }
        Ok(inst)
    }

    fn parse_operands(&mut self, op: Opcode, scope: &mut Scope) -> PResult<InstData> {
        use Opcode::*;
        let data = match op {
            Const => {
                let ty = self.parse_type()?;
                let c = self.parse_const(&ty)?;
                InstData::new(Const, ty, vec![]).with_extra(Extra::Const(c))
            }
            Array => {
                let ty = self.parse_type()?;
                let args = self.operand_list(scope, Tok::LBracket, Tok::RBracket)?;
                InstData::new(Array, ty, args)
            }
            Struct => {
                let ty = self.parse_type()?;
                let args = self.operand_list(scope, Tok::LBrace, Tok::RBrace)?;
                InstData::new(Struct, ty, args)
            }
            Not | Neg | Sig | Prb | Var | Alloc | Ld | Free => {
                let ty = self.parse_type()?;
                let a = self.operand(scope)?;
                InstData::new(op, ty, vec![a])
            }
            Shl | Shr => {
                let ty = self.parse_type()?;
                let mut args = vec![self.operand(scope)?];
                for _ in 0..2 {
                    self.expect(&Tok::Comma)?;
                    args.push(self.operand(scope)?);
                }
                InstData::new(op, ty, args)
            }
            Mux => {
                let ty = self.parse_type()?;
                let mut args = self.operand_list(scope, Tok::LBracket, Tok::RBracket)?;
                self.expect(&Tok::Comma)?;
                args.push(self.operand(scope)?);
                InstData::new(Mux, ty, args)
            }
            InsField | ExtField | InsSlice | ExtSlice => {
                let ty = self.parse_type()?;
                let mut args = vec![self.operand(scope)?];
                if matches!(op, InsField | InsSlice) {
                    self.expect(&Tok::Comma)?;
                    args.push(self.operand(scope)?);
                }
                let n = if matches!(op, InsField | ExtField) { 1 } else { 2 };
                let mut imms = vec![];
                for _ in 0..n {
                    self.expect(&Tok::Comma)?;
                    imms.push(self.usize_lit()?);
                }
                InstData::new(op, ty, args).with_imms(imms)
            }
            Drv => {
                let ty = self.parse_type()?;
                let mut args = vec![self.operand(scope)?];
                for _ in 0..2 {
                    self.expect(&Tok::Comma)?;
                    args.push(self.operand(scope)?);
                }
                if self.eat_ident("if") {
                    args.push(self.operand(scope)?);
                }
                InstData::new(Drv, ty, args)
            }
            Reg => {
                let ty = self.parse_type()?;
                let target = self.operand(scope)?;
                let mut triggers = vec![];
                while self.eat(&Tok::Comma) {
                    self.expect(&Tok::LBracket)?;
                    let value = self.operand(scope)?;
                    self.expect(&Tok::Comma)?;
                    let mode = match self.peek().clone() {
                        Tok::Ident(s) => match RegMode::from_keyword(&s) {
                            Some(m) => {
                                self.bump();
                                m
                            }
                            None => return self.expected("a trigger mode"),
                        },
                        _ => return self.expected("a trigger mode"),
                    };
                    let trigger = self.operand(scope)?;
                    let delay = if self.eat_ident("after") {
                        Some(self.operand(scope)?)
                    } else {
                        None
                    };
                    let gate = if self.eat_ident("if") {
                        Some(self.operand(scope)?)
                    } else {
                        None
                    };
                    self.expect(&Tok::RBracket)?;
                    triggers.push(RegTriggerRef {
                        mode,
                        value,
                        trigger,
                        delay,
                        gate,
                    });
                }
                InstData::reg(ty, target, &triggers)
            }
            Con | St | Del | Add | Sub | Mul | Div | Sdiv | Mod | Smod | Rem | Srem | And | Or
            | Xor | Eq | Neq | Ult | Ugt | Ule | Uge | Slt | Sgt | Sle | Sge => {
                let ty = self.parse_type()?;
                let a = self.operand(scope)?;
                self.expect(&Tok::Comma)?;
                let b = self.operand(scope)?;
                InstData::new(op, ty, vec![a, b])
            }
            Inst => {
                let (name, _) = self.parse_unit_name()?;
                let mut args = self.operand_list(scope, Tok::LParen, Tok::RParen)?;
                let inputs = args.len();
                self.expect(&Tok::Arrow)?;
                args.extend(self.operand_list(scope, Tok::LParen, Tok::RParen)?);
                InstData::new(Inst, Type::Void, args).with_extra(Extra::Unit { name, inputs })
            }
            Call => {
                let ty = self.parse_type()?;
                let (name, _) = self.parse_unit_name()?;
                let args = self.operand_list(scope, Tok::LParen, Tok::RParen)?;
                let inputs = args.len();
                InstData::new(Call, ty, args).with_extra(Extra::Unit { name, inputs })
            }
            Phi => {
                let ty = self.parse_type()?;
                let mut args = vec![];
                let mut blocks = vec![];
                loop {
                    self.expect(&Tok::LBracket)?;
                    args.push(self.operand(scope)?);
                    self.expect(&Tok::Comma)?;
                    blocks.push(self.block_operand(scope)?);
                    self.expect(&Tok::RBracket)?;
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                InstData::new(Phi, ty, args).with_blocks(blocks)
            }
            Br => {
                let (first, span) = self.local()?;
                if self.eat(&Tok::Comma) {
                    let c = scope.use_value(first, span);
                    let f = self.block_operand(scope)?;
                    self.expect(&Tok::Comma)?;
                    let t = self.block_operand(scope)?;
                    InstData::new(BrCond, Type::Void, vec![c]).with_blocks(vec![f, t])
                } else {
                    let b = scope.use_block(first, span);
                    InstData::new(Br, Type::Void, vec![]).with_blocks(vec![b])
                }
            }
            Wait => {
                let dest = self.block_operand(scope)?;
                let mut args = vec![];
                let has_time = self.eat_ident("for");
                if has_time {
                    args.push(self.operand(scope)?);
                }
                while self.eat(&Tok::Comma) {
                    args.push(self.operand(scope)?);
                }
                InstData::new(Wait, Type::Void, args)
                    .with_blocks(vec![dest])
                    .with_extra(Extra::Wait { has_time })
            }
            Halt => InstData::new(Halt, Type::Void, vec![]),
            Ret => {
                if matches!(self.peek(), Tok::Ident(s) if s != "void" && self.looks_like_type(s))
                    || matches!(self.peek(), Tok::LBracket | Tok::LBrace)
                {
                    let ty = self.parse_type()?;
                    let v = self.operand(scope)?;
                    InstData::new(Ret, ty, vec![v])
                } else {
                    InstData::new(Ret, Type::Void, vec![])
                }
            }
            BrCond => unreachable!("`br` parses as the unconditional form"),
        };
        Ok(data)
    }

    fn looks_like_type(&self, s: &str) -> bool {
        if s == "time" {
            return true;
        }
        let (head, num) = s.split_at(1);
        matches!(head, "i" | "n" | "l") && !num.is_empty() && num.bytes().all(|b| b.is_ascii_digit())
    }

    fn parse_const(&mut self, ty: &Type) -> PResult<ConstValue> {
        let span = self.span();
        match ty {
            Type::Int(w) => match self.bump().0 {
                Tok::Int(s) => {
                    let (neg, digits) = match s.strip_prefix('-') {
                        Some(d) => (true, d),
                        None => (false, s.as_str()),
                    };
                    let mag: BigUint = digits.parse().map_err(|_| {
                        Diagnostic::error(Some(span), format!("invalid integer `{}`", s))
                    })?;
                    let modulus = BigUint::one() << *w;
                    if (!neg && mag >= modulus) || (neg && mag > (&modulus >> 1u32)) {
                        return Err(Diagnostic::error(
                            Some(span),
                            format!("constant {} does not fit in `{}`", s, ty),
                        ));
                    }
                    let v = if neg && mag != BigUint::from(0u32) {
                        modulus - mag
                    } else {
                        mag
                    };
                    Ok(ConstValue::Int(v))
                }
                t => Err(Diagnostic::error(
                    Some(span),
                    format!("expected an integer constant, found {}", t.describe()),
                )),
            },
            Type::Enum(_) => Ok(ConstValue::Enum(self.usize_lit()?)),
            Type::Logic(_) => match self.bump().0 {
                Tok::Str(s) => {
                    let mut ds = vec![];
                    for c in s.chars().rev() {
                        ds.push(LogicDigit::from_char(c).ok_or_else(|| {
                            Diagnostic::error(Some(span), format!("invalid logic digit `{}`", c))
                        })?);
                    }
                    Ok(ConstValue::Logic(ds))
                }
                t => Err(Diagnostic::error(
                    Some(span),
                    format!("expected a logic string, found {}", t.describe()),
                )),
            },
            Type::Time => Ok(ConstValue::Time(self.parse_time()?)),
            _ => Err(Diagnostic::error(
                Some(span),
                format!("no constants of type `{}`", ty),
            )),
        }
    }

    /// `<num><unit> [<int>d] [<int>e]`
    fn parse_time(&mut self) -> PResult<TimeValue> {
        let span = self.span();
        let mut t = TimeValue::ZERO;
        let mut stage = 0;
        while let Tok::TimePart(num, unit) = self.peek().clone() {
            let this = self.span();
            let bad = |m: String| Diagnostic::error(Some(this), m);
            match unit.as_str() {
                "d" | "e" => {
                    let n: u32 = num
                        .parse()
                        .map_err(|_| bad(format!("invalid step count `{}`", num)))?;
                    let s = if unit == "d" { 2 } else { 3 };
                    if s <= stage {
                        return Err(bad("time components out of order".into()));
                    }
                    stage = s;
                    if unit == "d" {
                        t.delta = n;
                    } else {
                        t.epsilon = n;
                    }
                }
                _ => {
                    let scale = TIME_UNITS
                        .iter()
                        .find(|(u, _)| *u == unit)
                        .map(|(_, s)| *s)
                        .ok_or_else(|| bad(format!("unknown time unit `{}`", unit)))?;
                    if stage >= 1 {
                        return Err(bad("time components out of order".into()));
                    }
                    stage = 1;
                    t.fs = scale_time(&num, scale)
                        .ok_or_else(|| bad(format!("`{}{}` is not a whole number of femtoseconds", num, unit)))?;
                }
            }
            self.bump();
        }
        if stage == 0 {
            return Err(Diagnostic::error(Some(span), "expected a time literal"));
        }
        Ok(t)
    }
}

fn scale_time(num: &str, scale: u64) -> Option<u64> {
    if num.starts_with('-') {
        return None;
    }
    let (int, frac) = match num.split_once('.') {
        Some((i, f)) => (i, f),
        None => (num, ""),
    };
    let mut fs = int.parse::<u64>().ok()?.checked_mul(scale)?;
    let mut place = scale;
    for c in frac.chars() {
        if place % 10 != 0 {
            if c != '0' {
                return None;
            }
            continue;
        }
        place /= 10;
        fs = fs.checked_add(place * c.to_digit(10)? as u64)?;
    }
    Some(fs)
}
