//! The type system.

use std::fmt;

/// A type of a value in the IR.
///
/// Types compare structurally: two types are equal iff their kind trees are
/// equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Type {
    Void,
    /// `iN`: an N-bit integer.
    Int(usize),
    /// `nN`: an enumeration with N distinct values.
    Enum(usize),
    /// `lN`: N nine-valued logic digits.
    Logic(usize),
    /// `T*`
    Pointer(Box<Type>),
    /// `T$`
    Signal(Box<Type>),
    /// `[N x T]`
    Array(usize, Box<Type>),
    /// `{T1, T2, ...}`
    Struct(Vec<Type>),
    Time,
    /// `(T1, T2) R`
    Func(Vec<Type>, Box<Type>),
}

impl Type {
    pub fn int(width: usize) -> Type {
        Type::Int(width)
    }

    pub fn signal(inner: Type) -> Type {
        Type::Signal(Box::new(inner))
    }

    pub fn pointer(inner: Type) -> Type {
        Type::Pointer(Box::new(inner))
    }

    pub fn array(len: usize, elem: Type) -> Type {
        Type::Array(len, Box::new(elem))
    }

    pub fn is_void(&self) -> bool {
        matches!(self, Type::Void)
    }

    pub fn is_signal(&self) -> bool {
        matches!(self, Type::Signal(_))
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Type::Pointer(_))
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Type::Int(1))
    }

    pub fn is_time(&self) -> bool {
        matches!(self, Type::Time)
    }

    /// The type behind a signal or pointer.
    pub fn inner(&self) -> Option<&Type> {
        match self {
            Type::Signal(t) | Type::Pointer(t) => Some(t),
            _ => None,
        }
    }

    /// Wrap a type in the same signal/pointer kind as `self`.
    pub fn rewrap(&self, inner: Type) -> Type {
        match self {
            Type::Signal(_) => Type::signal(inner),
            Type::Pointer(_) => Type::pointer(inner),
            _ => inner,
        }
    }

    /// Bit width for integer and logic types.
    pub fn width(&self) -> Option<usize> {
        match *self {
            Type::Int(w) | Type::Logic(w) => Some(w),
            _ => None,
        }
    }

    /// Number of scalar leaves a value of this type flattens into.
    ///
    /// Integers and logic values contribute one leaf per bit/digit; enums and
    /// times one leaf each.
    pub fn leaf_count(&self) -> usize {
        match self {
            Type::Int(w) | Type::Logic(w) => *w,
            Type::Enum(_) | Type::Time => 1,
            Type::Array(n, e) => n * e.leaf_count(),
            Type::Struct(fs) => fs.iter().map(Type::leaf_count).sum(),
            Type::Void | Type::Pointer(_) | Type::Signal(_) | Type::Func(..) => 0,
        }
    }

    /// Type of field `index` of a struct or array.
    pub fn field(&self, index: usize) -> Option<&Type> {
        match self {
            Type::Struct(fs) => fs.get(index),
            Type::Array(n, e) if index < *n => Some(e),
            _ => None,
        }
    }

    /// Leaf offset of field `index` within the flattened representation.
    pub fn field_leaf_offset(&self, index: usize) -> Option<usize> {
        match self {
            Type::Struct(fs) if index < fs.len() => {
                Some(fs[..index].iter().map(Type::leaf_count).sum())
            }
            Type::Array(n, e) if index < *n => Some(index * e.leaf_count()),
            _ => None,
        }
    }

    /// Type produced by slicing `length` elements/bits out of this type.
    pub fn slice(&self, offset: usize, length: usize) -> Option<Type> {
        match self {
            Type::Int(w) if offset + length <= *w && length > 0 => Some(Type::Int(length)),
            Type::Logic(w) if offset + length <= *w && length > 0 => Some(Type::Logic(length)),
            Type::Array(n, e) if offset + length <= *n => Some(Type::Array(length, e.clone())),
            _ => None,
        }
    }

    /// Leaf granule of a slice: how many leaves one sliced element spans.
    pub fn slice_granule(&self) -> usize {
        match self {
            Type::Array(_, e) => e.leaf_count(),
            _ => 1,
        }
    }

    /// Check the structural well-formedness rules of a type.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Type::Int(0) => Err("integer width must be at least 1".into()),
            Type::Logic(0) => Err("logic width must be at least 1".into()),
            Type::Enum(0) => Err("enum cardinality must be at least 1".into()),
            Type::Pointer(t) | Type::Signal(t) => {
                if matches!(**t, Type::Func(..)) {
                    Err(format!("`{}` wraps a function type", self))
                } else {
                    t.validate()
                }
            }
            Type::Array(_, e) => e.validate(),
            Type::Struct(fs) => fs.iter().try_for_each(Type::validate),
            Type::Func(args, ret) => {
                args.iter().try_for_each(Type::validate)?;
                ret.validate()
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Type::Void => write!(f, "void"),
            Type::Int(w) => write!(f, "i{}", w),
            Type::Enum(n) => write!(f, "n{}", n),
            Type::Logic(w) => write!(f, "l{}", w),
            Type::Pointer(t) => write!(f, "{}*", t),
            Type::Signal(t) => write!(f, "{}$", t),
            Type::Array(n, t) => write!(f, "[{} x {}]", n, t),
            Type::Struct(fs) => {
                write!(f, "{{")?;
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", t)?;
                }
                write!(f, "}}")
            }
            Type::Time => write!(f, "time"),
            Type::Func(args, ret) => {
                write!(f, "(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", t)?;
                }
                write!(f, ") {}", ret)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display() {
        let t = Type::Struct(vec![Type::int(32), Type::signal(Type::array(4, Type::Logic(8)))]);
        assert_eq!(t.to_string(), "{i32, [4 x l8]$}");
        assert_eq!(Type::pointer(Type::Enum(3)).to_string(), "n3*");
    }

    #[test]
    fn leaves_and_offsets() {
        let t = Type::Struct(vec![Type::int(3), Type::Time, Type::array(2, Type::int(4))]);
        assert_eq!(t.leaf_count(), 12);
        assert_eq!(t.field_leaf_offset(2), Some(4));
        assert_eq!(Type::array(5, Type::int(8)).field_leaf_offset(3), Some(24));
    }

    #[test]
    fn validation() {
        assert!(Type::Int(0).validate().is_err());
        assert!(Type::Enum(0).validate().is_err());
        assert!(Type::signal(Type::Func(vec![], Box::new(Type::Void)))
            .validate()
            .is_err());
        assert!(Type::signal(Type::int(1)).validate().is_ok());
    }
}
