//! Concrete values and the semantics of the pure operators.
//!
//! Shared by constant folding and the simulator so both agree bit for bit.

use super::inst::{ConstValue, InstData, Opcode};
use super::logic::LogicDigit;
use super::time::TimeValue;
use super::ty::Type;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;

/// A concrete value of a data type.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Val {
    Void,
    /// Bits are kept reduced modulo `2^width`.
    Int { width: usize, bits: BigUint },
    Enum(usize),
    /// Digits LSB first.
    Logic(Vec<LogicDigit>),
    Time(TimeValue),
    Array(Vec<Val>),
    Struct(Vec<Val>),
}

/// One scalar of a flattened value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Leaf {
    Bit(bool),
    Digit(LogicDigit),
    Enum(usize),
    Time(TimeValue),
}

fn mask(width: usize) -> BigUint {
    (BigUint::one() << width) - BigUint::one()
}

impl Val {
    pub fn int(width: usize, v: impl Into<BigUint>) -> Val {
        let bits: BigUint = v.into();
        Val::Int {
            width,
            bits: bits & mask(width),
        }
    }

    pub fn from_bool(b: bool) -> Val {
        Val::int(1, b as u32)
    }

    /// Default contents of a value of type `ty`: zero integers, `U` logic,
    /// first enum variant, time zero.
    pub fn default_of(ty: &Type) -> Val {
        match ty {
            Type::Int(w) => Val::int(*w, 0u32),
            Type::Enum(_) => Val::Enum(0),
            Type::Logic(w) => Val::Logic(vec![LogicDigit::U; *w]),
            Type::Time => Val::Time(TimeValue::ZERO),
            Type::Array(n, e) => Val::Array(vec![Val::default_of(e); *n]),
            Type::Struct(fs) => Val::Struct(fs.iter().map(Val::default_of).collect()),
            _ => Val::Void,
        }
    }

    pub fn from_const(c: &ConstValue, ty: &Type) -> Val {
        match (c, ty) {
            (ConstValue::Int(v), Type::Int(w)) => Val::int(*w, v.clone()),
            (ConstValue::Enum(v), _) => Val::Enum(*v),
            (ConstValue::Logic(ds), _) => Val::Logic(ds.clone()),
            (ConstValue::Time(t), _) => Val::Time(*t),
            (ConstValue::Int(v), _) => Val::int(v.bits().max(1) as usize, v.clone()),
        }
    }

    /// The constant for a scalar value.
    pub fn to_const(&self) -> Option<ConstValue> {
        Some(match self {
            Val::Int { bits, .. } => ConstValue::Int(bits.clone()),
            Val::Enum(v) => ConstValue::Enum(*v),
            Val::Logic(ds) => ConstValue::Logic(ds.clone()),
            Val::Time(t) => ConstValue::Time(*t),
            _ => return None,
        })
    }

    /// Truth value of an `i1`.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Val::Int { width: 1, bits } => Some(!bits.is_zero()),
            Val::Logic(ds) if ds.len() == 1 => ds[0].to_bool(),
            _ => None,
        }
    }

    /// Numeric value of an integer or enum, saturated to `usize`.
    pub fn as_index(&self) -> Option<usize> {
        match self {
            Val::Int { bits, .. } => Some(bits.to_usize().unwrap_or(usize::MAX)),
            Val::Enum(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<TimeValue> {
        match self {
            Val::Time(t) => Some(*t),
            _ => None,
        }
    }

    // ---- flattening -----------------------------------------------------

    pub fn flatten_into(&self, out: &mut Vec<Leaf>) {
        match self {
            Val::Void => {}
            Val::Int { width, bits } => {
                for i in 0..*width {
                    out.push(Leaf::Bit(bits.bit(i as u64)));
                }
            }
            Val::Enum(v) => out.push(Leaf::Enum(*v)),
            Val::Logic(ds) => out.extend(ds.iter().map(|&d| Leaf::Digit(d))),
            Val::Time(t) => out.push(Leaf::Time(*t)),
            Val::Array(es) | Val::Struct(es) => {
                for e in es {
                    e.flatten_into(out);
                }
            }
        }
    }

    pub fn flatten(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    /// Rebuild a value of type `ty` from its leaves.
    pub fn unflatten(ty: &Type, leaves: &[Leaf]) -> Val {
        let mut pos = 0;
        let v = Val::unflatten_at(ty, leaves, &mut pos);
        debug_assert_eq!(pos, leaves.len());
        v
    }

    fn unflatten_at(ty: &Type, leaves: &[Leaf], pos: &mut usize) -> Val {
        match ty {
            Type::Int(w) => {
                let mut bits = BigUint::zero();
                for i in 0..*w {
                    if leaves[*pos + i] == Leaf::Bit(true) {
                        bits.set_bit(i as u64, true);
                    }
                }
                *pos += w;
                Val::Int { width: *w, bits }
            }
            Type::Logic(w) => {
                let ds = leaves[*pos..*pos + w]
                    .iter()
                    .map(|l| match l {
                        Leaf::Digit(d) => *d,
                        Leaf::Bit(b) => LogicDigit::from_bool(*b),
                        _ => LogicDigit::X,
                    })
                    .collect();
                *pos += w;
                Val::Logic(ds)
            }
            Type::Enum(_) => {
                *pos += 1;
                match leaves[*pos - 1] {
                    Leaf::Enum(v) => Val::Enum(v),
                    _ => Val::Enum(0),
                }
            }
            Type::Time => {
                *pos += 1;
                match leaves[*pos - 1] {
                    Leaf::Time(t) => Val::Time(t),
                    _ => Val::Time(TimeValue::ZERO),
                }
            }
            Type::Array(n, e) => {
                Val::Array((0..*n).map(|_| Val::unflatten_at(e, leaves, pos)).collect())
            }
            Type::Struct(fs) => {
                Val::Struct(fs.iter().map(|f| Val::unflatten_at(f, leaves, pos)).collect())
            }
            _ => Val::Void,
        }
    }

    fn type_of_leaves(&self) -> Type {
        match self {
            Val::Void => Type::Void,
            Val::Int { width, .. } => Type::Int(*width),
            Val::Enum(_) => Type::Enum(usize::MAX),
            Val::Logic(ds) => Type::Logic(ds.len()),
            Val::Time(_) => Type::Time,
            Val::Array(es) => match es.first() {
                Some(e) => Type::array(es.len(), e.type_of_leaves()),
                None => Type::array(0, Type::Void),
            },
            Val::Struct(es) => Type::Struct(es.iter().map(Val::type_of_leaves).collect()),
        }
    }

    // ---- aggregate access -----------------------------------------------

    pub fn ext_field(&self, index: usize) -> Option<Val> {
        match self {
            Val::Array(es) | Val::Struct(es) => es.get(index).cloned(),
            _ => None,
        }
    }

    pub fn ins_field(&self, index: usize, v: Val) -> Option<Val> {
        let mut out = self.clone();
        match &mut out {
            Val::Array(es) | Val::Struct(es) => *es.get_mut(index)? = v,
            _ => return None,
        }
        Some(out)
    }

    pub fn ext_slice(&self, offset: usize, length: usize) -> Option<Val> {
        match self {
            Val::Int { width, bits } if offset + length <= *width => {
                Some(Val::int(length, bits >> offset))
            }
            Val::Logic(ds) if offset + length <= ds.len() => {
                Some(Val::Logic(ds[offset..offset + length].to_vec()))
            }
            Val::Array(es) if offset + length <= es.len() => {
                Some(Val::Array(es[offset..offset + length].to_vec()))
            }
            _ => None,
        }
    }

    pub fn ins_slice(&self, offset: usize, length: usize, v: &Val) -> Option<Val> {
        match (self, v) {
            (Val::Int { width, bits }, Val::Int { bits: ins, .. }) if offset + length <= *width => {
                let cleared = bits & ((mask(length) << offset) ^ mask(*width));
                Some(Val::int(*width, cleared | (ins << offset)))
            }
            (Val::Logic(ds), Val::Logic(ins)) if offset + length <= ds.len() => {
                let mut out = ds.clone();
                out[offset..offset + length].copy_from_slice(ins);
                Some(Val::Logic(out))
            }
            (Val::Array(es), Val::Array(ins)) if offset + length <= es.len() => {
                let mut out = es.clone();
                out[offset..offset + length].clone_from_slice(ins);
                Some(Val::Array(out))
            }
            _ => None,
        }
    }

    // ---- operators ------------------------------------------------------

    /// Evaluate `not` or `neg`.
    pub fn unary(op: Opcode, a: &Val) -> Val {
        match (op, a) {
            (Opcode::Not, Val::Int { width, bits }) => Val::int(*width, bits ^ mask(*width)),
            (Opcode::Not, Val::Logic(ds)) => Val::Logic(ds.iter().map(|d| d.not()).collect()),
            (Opcode::Neg, Val::Int { width, bits }) => {
                Val::int(*width, (mask(*width) ^ bits) + 1u32)
            }
            (Opcode::Neg, Val::Logic(_)) => {
                logic_arith(a, a, |w, x, _| Val::unary(Opcode::Neg, &Val::int(w, x.clone())))
            }
            _ => a.clone(),
        }
    }

    /// Evaluate a binary arithmetic or bitwise operator.
    ///
    /// Returns the result and whether a division by zero occurred (the result
    /// is then zero).
    pub fn binary(op: Opcode, a: &Val, b: &Val) -> (Val, bool) {
        match (a, b) {
            (Val::Int { width, bits: x }, Val::Int { bits: y, .. }) => int_binary(op, *width, x, y),
            (Val::Logic(xs), Val::Logic(ys)) => match op {
                Opcode::And => (zip_digits(xs, ys, LogicDigit::and), false),
                Opcode::Or => (zip_digits(xs, ys, LogicDigit::or), false),
                Opcode::Xor => (zip_digits(xs, ys, LogicDigit::xor), false),
                _ => {
                    let mut dz = false;
                    let r = logic_arith(a, b, |w, x, y| {
                        let (r, z) = int_binary(op, w, x, y);
                        dz = z;
                        r
                    });
                    (r, dz)
                }
            },
            _ => (a.clone(), false),
        }
    }

    /// Evaluate a comparison.
    pub fn compare(op: Opcode, a: &Val, b: &Val) -> bool {
        match op {
            Opcode::Eq => return a == b,
            Opcode::Neq => return a != b,
            _ => {}
        }
        match (a, b) {
            (Val::Int { width, bits: x }, Val::Int { bits: y, .. }) => int_compare(op, *width, x, y),
            (Val::Logic(xs), Val::Logic(ys)) => match (logic_to_int(xs), logic_to_int(ys)) {
                (Some(x), Some(y)) => int_compare(op, xs.len(), &x, &y),
                _ => false,
            },
            (Val::Time(x), Val::Time(y)) => match op {
                Opcode::Ult | Opcode::Slt => x < y,
                Opcode::Ugt | Opcode::Sgt => x > y,
                Opcode::Ule | Opcode::Sle => x <= y,
                Opcode::Uge | Opcode::Sge => x >= y,
                _ => false,
            },
            _ => false,
        }
    }

    /// Evaluate `shl`/`shr`: shift `base` by `amount` positions, filling the
    /// vacated positions from `hidden`.
    pub fn shift(op: Opcode, base: &Val, hidden: &Val, amount: usize) -> Val {
        let ty = base.type_of_leaves();
        let granule = ty.slice_granule();
        let b = base.flatten();
        let h = hidden.flatten();
        let n = b.len();
        let amt = amount.saturating_mul(granule).min(n);
        let leaves = shift_leaves(op, &b, &h, amt);
        debug_assert_eq!(leaves.len(), n);
        match base {
            Val::Array(es) if !es.is_empty() => Val::unflatten(&ty, &leaves),
            Val::Array(_) => base.clone(),
            _ => Val::unflatten(&ty, &leaves),
        }
    }

    /// Evaluate `mux`; an out-of-range selector picks the last option.
    pub fn mux(options: &[Val], sel: &Val) -> Val {
        let i = sel.as_index().unwrap_or(0).min(options.len() - 1);
        options[i].clone()
    }
}

/// Shift a flattened value; `amt` counts leaves.
pub fn shift_leaves<T: Copy>(op: Opcode, base: &[T], hidden: &[T], amt: usize) -> Vec<T> {
    let n = base.len();
    if op == Opcode::Shl {
        // Low leaves come from the top of `hidden`.
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&hidden[n - amt..]);
        out.extend_from_slice(&base[..n - amt]);
        out
    } else {
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&base[amt..]);
        out.extend_from_slice(&hidden[..amt]);
        out
    }
}

fn zip_digits(
    xs: &[LogicDigit],
    ys: &[LogicDigit],
    f: fn(LogicDigit, LogicDigit) -> LogicDigit,
) -> Val {
    Val::Logic(xs.iter().zip(ys).map(|(&x, &y)| f(x, y)).collect())
}

fn logic_to_int(ds: &[LogicDigit]) -> Option<BigUint> {
    let mut bits = BigUint::zero();
    for (i, d) in ds.iter().enumerate() {
        if d.to_bool()? {
            bits.set_bit(i as u64, true);
        }
    }
    Some(bits)
}

/// Run integer arithmetic on logic operands after mapping `L`/`H` to `0`/`1`;
/// any other digit makes the whole result `X`.
fn logic_arith(a: &Val, b: &Val, f: impl FnOnce(usize, &BigUint, &BigUint) -> Val) -> Val {
    let (xs, ys) = match (a, b) {
        (Val::Logic(xs), Val::Logic(ys)) => (xs, ys),
        _ => unreachable!(),
    };
    let w = xs.len();
    match (logic_to_int(xs), logic_to_int(ys)) {
        (Some(x), Some(y)) => match f(w, &x, &y) {
            Val::Int { bits, .. } => Val::Logic(
                (0..w)
                    .map(|i| LogicDigit::from_bool(bits.bit(i as u64)))
                    .collect(),
            ),
            v => v,
        },
        _ => Val::Logic(vec![LogicDigit::X; w]),
    }
}

fn to_signed(width: usize, x: &BigUint) -> (bool, BigUint) {
    if x.bit(width as u64 - 1) {
        (true, (mask(width) ^ x) + 1u32)
    } else {
        (false, x.clone())
    }
}

fn from_signed(width: usize, neg: bool, mag: BigUint) -> Val {
    if neg && !mag.is_zero() {
        Val::int(width, (mask(width) ^ (mag & mask(width))) + 1u32)
    } else {
        Val::int(width, mag)
    }
}

fn int_binary(op: Opcode, width: usize, x: &BigUint, y: &BigUint) -> (Val, bool) {
    use Opcode::*;
    let m = mask(width);
    let r = match op {
        Add => Val::int(width, x + y),
        Sub => Val::int(width, (x + (&m ^ y) + 1u32) & &m),
        Mul => Val::int(width, x * y),
        And => Val::int(width, x & y),
        Or => Val::int(width, x | y),
        Xor => Val::int(width, x ^ y),
        Div | Mod | Rem | Sdiv | Smod | Srem if y.is_zero() => {
            return (Val::int(width, 0u32), true)
        }
        Div => Val::int(width, x / y),
        Mod | Rem => Val::int(width, x % y),
        Sdiv => {
            let (xn, xm) = to_signed(width, x);
            let (yn, ym) = to_signed(width, y);
            from_signed(width, xn != yn, xm / ym)
        }
        Srem => {
            // Sign follows the dividend.
            let (xn, xm) = to_signed(width, x);
            let (_, ym) = to_signed(width, y);
            from_signed(width, xn, xm % ym)
        }
        Smod => {
            // Sign follows the divisor.
            let (xn, xm) = to_signed(width, x);
            let (yn, ym) = to_signed(width, y);
            let r = &xm % &ym;
            if r.is_zero() || xn == yn {
                from_signed(width, yn, r)
            } else {
                from_signed(width, yn, ym - r)
            }
        }
        _ => Val::int(width, x.clone()),
    };
    (r, false)
}

fn int_compare(op: Opcode, width: usize, x: &BigUint, y: &BigUint) -> bool {
    use Opcode::*;
    match op {
        Ult => x < y,
        Ugt => x > y,
        Ule => x <= y,
        Uge => x >= y,
        Slt | Sgt | Sle | Sge => {
            let (xn, xm) = to_signed(width, x);
            let (yn, ym) = to_signed(width, y);
            let ord = match (xn, yn) {
                (true, false) => std::cmp::Ordering::Less,
                (false, true) => std::cmp::Ordering::Greater,
                (false, false) => xm.cmp(&ym),
                (true, true) => ym.cmp(&xm),
            };
            match op {
                Slt => ord.is_lt(),
                Sgt => ord.is_gt(),
                Sle => ord.is_le(),
                _ => ord.is_ge(),
            }
        }
        _ => false,
    }
}

/// Evaluate a pure instruction on concrete operands.
///
/// Returns the result and whether a division by zero occurred, or `None` if
/// the instruction is not pure or the operands do not fit it.
pub fn eval_pure(d: &InstData, args: &[&Val]) -> Option<(Val, bool)> {
    use Opcode::*;
    let r = match d.opcode {
        Const => Val::from_const(d.const_value()?, &d.ty),
        Array => Val::Array(args.iter().map(|&a| a.clone()).collect()),
        Struct => Val::Struct(args.iter().map(|&a| a.clone()).collect()),
        op if op.is_unary() => Val::unary(op, args[0]),
        op if op.is_binary() => return Some(Val::binary(op, args[0], args[1])),
        op if op.is_compare() => Val::from_bool(Val::compare(op, args[0], args[1])),
        Shl | Shr => {
            let amt = args[2].as_index()?;
            Val::shift(d.opcode, args[0], args[1], amt)
        }
        Mux => {
            let (sel, opts) = args.split_last()?;
            let opts: Vec<Val> = opts.iter().map(|&v| v.clone()).collect();
            Val::mux(&opts, sel)
        }
        ExtField => args[0].ext_field(*d.imms.first()?)?,
        InsField => args[0].ins_field(*d.imms.first()?, args[1].clone())?,
        ExtSlice => args[0].ext_slice(*d.imms.first()?, *d.imms.get(1)?)?,
        InsSlice => args[0].ins_slice(*d.imms.first()?, *d.imms.get(1)?, args[1])?,
        _ => return None,
    };
    Some((r, false))
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Val::Void => write!(f, "void"),
            Val::Int { bits, .. } => write!(f, "{}", bits),
            Val::Enum(v) => write!(f, "{}", v),
            Val::Logic(ds) => {
                write!(f, "\"")?;
                for d in ds.iter().rev() {
                    write!(f, "{}", d)?;
                }
                write!(f, "\"")
            }
            Val::Time(t) => write!(f, "{}", t),
            Val::Array(es) | Val::Struct(es) => {
                let (open, close) = if matches!(self, Val::Array(_)) {
                    ("[", "]")
                } else {
                    ("{", "}")
                };
                write!(f, "{}", open)?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, "{}", close)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn i(w: usize, v: u64) -> Val {
        Val::int(w, v)
    }

    fn signed(w: usize, v: &Val) -> i64 {
        let u = v.as_index().unwrap() as i64;
        if u >> (w - 1) & 1 == 1 {
            u - (1 << w)
        } else {
            u
        }
    }

    #[test]
    fn slices_by_shift_and_mask() {
        let v = i(8, 0b1011_0100);
        assert_eq!(v.ext_slice(2, 4), Some(i(4, 0b1101)));
        assert_eq!(v.ins_slice(2, 4, &i(4, 0)), Some(i(8, 0b1000_0000)));
        assert_eq!(v.ext_slice(6, 4), None);
    }

    #[test]
    fn shifts_fill_from_hidden() {
        let base = i(8, 0b1000_0001);
        let hidden = i(8, 0b1110_0000);
        assert_eq!(Val::shift(Opcode::Shl, &base, &hidden, 3), i(8, 0b0000_1111));
        assert_eq!(Val::shift(Opcode::Shr, &base, &hidden, 1), i(8, 0b0100_0000));
        assert_eq!(Val::shift(Opcode::Shr, &base, &hidden, 20), hidden);
        let arr = Val::Array(vec![i(4, 1), i(4, 2), i(4, 3)]);
        let fill = Val::Array(vec![i(4, 7), i(4, 8), i(4, 9)]);
        assert_eq!(
            Val::shift(Opcode::Shl, &arr, &fill, 1),
            Val::Array(vec![i(4, 9), i(4, 1), i(4, 2)])
        );
    }

    #[test]
    fn logic_arith_goes_unknown() {
        let a = Val::Logic(vec![LogicDigit::One, LogicDigit::H]);
        let b = Val::Logic(vec![LogicDigit::One, LogicDigit::Zero]);
        assert_eq!(
            Val::binary(Opcode::Add, &a, &b).0,
            Val::Logic(vec![LogicDigit::Zero, LogicDigit::Zero])
        );
        let x = Val::Logic(vec![LogicDigit::Z, LogicDigit::Zero]);
        assert_eq!(
            Val::binary(Opcode::Add, &x, &b).0,
            Val::Logic(vec![LogicDigit::X; 2])
        );
        assert!(!Val::compare(Opcode::Ult, &x, &b));
    }

    #[test]
    fn divide_by_zero_is_zero() {
        let (r, dz) = Val::binary(Opcode::Div, &i(8, 9), &i(8, 0));
        assert_eq!(r, i(8, 0));
        assert!(dz);
    }

    #[test]
    fn mux_selects() {
        let opts = [i(4, 1), i(4, 2), i(4, 3)];
        assert_eq!(Val::mux(&opts, &Val::Enum(1)), i(4, 2));
        assert_eq!(Val::mux(&opts, &i(8, 9)), i(4, 3));
    }

    proptest! {
        #[test]
        fn int_ops_match_machine_arithmetic(x in any::<u8>(), y in any::<u8>()) {
            let (a, b) = (i(8, x as u64), i(8, y as u64));
            let bin = |op| Val::binary(op, &a, &b).0.as_index().unwrap() as u8;
            prop_assert_eq!(bin(Opcode::Add), x.wrapping_add(y));
            prop_assert_eq!(bin(Opcode::Sub), x.wrapping_sub(y));
            prop_assert_eq!(bin(Opcode::Mul), x.wrapping_mul(y));
            prop_assert_eq!(bin(Opcode::Xor), x ^ y);
            prop_assert_eq!(Val::unary(Opcode::Neg, &a).as_index().unwrap() as u8, x.wrapping_neg());
            let (sx, sy) = (x as i8, y as i8);
            prop_assert_eq!(Val::compare(Opcode::Slt, &a, &b), sx < sy);
            prop_assert_eq!(Val::compare(Opcode::Sge, &a, &b), sx >= sy);
            prop_assert_eq!(Val::compare(Opcode::Ugt, &a, &b), x > y);
            if y != 0 {
                prop_assert_eq!(bin(Opcode::Div), x / y);
                prop_assert_eq!(bin(Opcode::Rem), x % y);
                let sdiv = Val::binary(Opcode::Sdiv, &a, &b).0;
                prop_assert_eq!(signed(8, &sdiv) as i8, sx.wrapping_div(sy));
                let srem = Val::binary(Opcode::Srem, &a, &b).0;
                prop_assert_eq!(signed(8, &srem) as i8, sx.wrapping_rem(sy));
                let smod = Val::binary(Opcode::Smod, &a, &b).0;
                let (wx, wy) = (sx as i16, sy as i16);
                prop_assert_eq!(signed(8, &smod) as i16, ((wx % wy + wy) % wy) as i8 as i16);
            }
        }

        #[test]
        fn flatten_round_trips(x in any::<u16>(), e in 0usize..5) {
            let ty = Type::Struct(vec![Type::int(16), Type::Enum(5), Type::Logic(2)]);
            let v = Val::Struct(vec![i(16, x as u64), Val::Enum(e), Val::Logic(vec![LogicDigit::Z, LogicDigit::H])]);
            prop_assert_eq!(Val::unflatten(&ty, &v.flatten()), v);
        }
    }
}
