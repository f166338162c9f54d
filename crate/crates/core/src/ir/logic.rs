//! Nine-valued logic digits.

use std::fmt;

/// One of the nine IEEE 1164 signal states.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum LogicDigit {
    /// Uninitialized.
    U,
    /// Forcing unknown.
    X,
    /// Forcing 0.
    Zero,
    /// Forcing 1.
    One,
    /// High impedance.
    Z,
    /// Weak unknown.
    W,
    /// Weak 0.
    L,
    /// Weak 1.
    H,
    /// Don't care.
    DontCare,
}

use LogicDigit::*;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Strength {
    HighImpedance,
    Weak,
    Forcing,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    Low,
    High,
    Unknown,
}

impl LogicDigit {
    pub const ALL: [LogicDigit; 9] = [U, X, Zero, One, Z, W, L, H, DontCare];

    pub fn from_char(c: char) -> Option<LogicDigit> {
        Some(match c {
            'U' | 'u' => U,
            'X' | 'x' => X,
            '0' => Zero,
            '1' => One,
            'Z' | 'z' => Z,
            'W' | 'w' => W,
            'L' | 'l' => L,
            'H' | 'h' => H,
            '-' => DontCare,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            U => 'U',
            X => 'X',
            Zero => '0',
            One => '1',
            Z => 'Z',
            W => 'W',
            L => 'L',
            H => 'H',
            DontCare => '-',
        }
    }

    pub fn from_bool(b: bool) -> LogicDigit {
        if b {
            One
        } else {
            Zero
        }
    }

    /// Map to a plain bit after stripping strength; `None` for unknowns.
    pub fn to_bool(self) -> Option<bool> {
        match self {
            Zero | L => Some(false),
            One | H => Some(true),
            _ => None,
        }
    }

    /// Character used in VCD dumps: strength is dropped, unknowns become `x`.
    pub fn vcd_char(self) -> char {
        match self {
            Zero | L => '0',
            One | H => '1',
            Z => 'z',
            U | X | W | DontCare => 'x',
        }
    }

    fn strength_level(self) -> (Strength, Level) {
        match self {
            Zero => (Strength::Forcing, Level::Low),
            One => (Strength::Forcing, Level::High),
            X | DontCare => (Strength::Forcing, Level::Unknown),
            L => (Strength::Weak, Level::Low),
            H => (Strength::Weak, Level::High),
            W => (Strength::Weak, Level::Unknown),
            Z => (Strength::HighImpedance, Level::Unknown),
            U => unreachable!(),
        }
    }

    fn from_strength_level(s: Strength, l: Level) -> LogicDigit {
        match (s, l) {
            (Strength::Forcing, Level::Low) => Zero,
            (Strength::Forcing, Level::High) => One,
            (Strength::Forcing, Level::Unknown) => X,
            (Strength::Weak, Level::Low) => L,
            (Strength::Weak, Level::High) => H,
            (Strength::Weak, Level::Unknown) => W,
            (Strength::HighImpedance, _) => Z,
        }
    }

    /// Resolve two digits driven onto the same wire.
    ///
    /// `U` dominates; otherwise the stronger driver wins and equal-strength
    /// drivers with different levels produce an unknown of that strength.
    pub fn resolve(self, other: LogicDigit) -> LogicDigit {
        if self == U || other == U {
            return U;
        }
        let (sa, la) = self.strength_level();
        let (sb, lb) = other.strength_level();
        if sa != sb {
            return if sa > sb {
                LogicDigit::from_strength_level(sa, la)
            } else {
                LogicDigit::from_strength_level(sb, lb)
            };
        }
        let level = if la == lb { la } else { Level::Unknown };
        LogicDigit::from_strength_level(sa, level)
    }

    pub fn and(self, other: LogicDigit) -> LogicDigit {
        AND_TABLE[self as usize][other as usize]
    }

    pub fn or(self, other: LogicDigit) -> LogicDigit {
        OR_TABLE[self as usize][other as usize]
    }

    pub fn xor(self, other: LogicDigit) -> LogicDigit {
        XOR_TABLE[self as usize][other as usize]
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> LogicDigit {
        NOT_TABLE[self as usize]
    }
}

impl fmt::Display for LogicDigit {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Resolve an arbitrary number of drivers; `Z` for none.
pub fn resolve_all(digits: impl IntoIterator<Item = LogicDigit>) -> LogicDigit {
    digits.into_iter().fold(Z, LogicDigit::resolve)
}

// Row/column order: U X 0 1 Z W L H -
const AND_TABLE: [[LogicDigit; 9]; 9] = [
    [U, U, Zero, U, U, U, Zero, U, U],
    [U, X, Zero, X, X, X, Zero, X, X],
    [Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero],
    [U, X, Zero, One, X, X, Zero, One, X],
    [U, X, Zero, X, X, X, Zero, X, X],
    [U, X, Zero, X, X, X, Zero, X, X],
    [Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero, Zero],
    [U, X, Zero, One, X, X, Zero, One, X],
    [U, X, Zero, X, X, X, Zero, X, X],
];

const OR_TABLE: [[LogicDigit; 9]; 9] = [
    [U, U, U, One, U, U, U, One, U],
    [U, X, X, One, X, X, X, One, X],
    [U, X, Zero, One, X, X, Zero, One, X],
    [One, One, One, One, One, One, One, One, One],
    [U, X, X, One, X, X, X, One, X],
    [U, X, X, One, X, X, X, One, X],
    [U, X, Zero, One, X, X, Zero, One, X],
    [One, One, One, One, One, One, One, One, One],
    [U, X, X, One, X, X, X, One, X],
];

const XOR_TABLE: [[LogicDigit; 9]; 9] = [
    [U, U, U, U, U, U, U, U, U],
    [U, X, X, X, X, X, X, X, X],
    [U, X, Zero, One, X, X, Zero, One, X],
    [U, X, One, Zero, X, X, One, Zero, X],
    [U, X, X, X, X, X, X, X, X],
    [U, X, X, X, X, X, X, X, X],
    [U, X, Zero, One, X, X, Zero, One, X],
    [U, X, One, Zero, X, X, One, Zero, X],
    [U, X, X, X, X, X, X, X, X],
];

const NOT_TABLE: [LogicDigit; 9] = [U, X, One, Zero, X, X, One, Zero, X];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_round_trip() {
        for d in LogicDigit::ALL {
            assert_eq!(LogicDigit::from_char(d.to_char()), Some(d));
        }
    }

    // Gate tables checked against the strength-stripping definition: map to
    // X01 first, then apply boolean logic with U dominance.
    fn to_x01(d: LogicDigit) -> LogicDigit {
        match d {
            U => U,
            Zero | L => Zero,
            One | H => One,
            _ => X,
        }
    }

    #[test]
    fn gates_match_x01_definition() {
        for a in LogicDigit::ALL {
            for b in LogicDigit::ALL {
                let (xa, xb) = (to_x01(a), to_x01(b));
                let and = if xa == Zero || xb == Zero {
                    Zero
                } else if xa == One && xb == One {
                    One
                } else if xa == U || xb == U {
                    U
                } else {
                    X
                };
                assert_eq!(a.and(b), and, "{} and {}", a, b);
                let or = if xa == One || xb == One {
                    One
                } else if xa == Zero && xb == Zero {
                    Zero
                } else if xa == U || xb == U {
                    U
                } else {
                    X
                };
                assert_eq!(a.or(b), or, "{} or {}", a, b);
                let xor = if xa == U || xb == U {
                    U
                } else if xa == X || xb == X {
                    X
                } else {
                    LogicDigit::from_bool((xa == One) != (xb == One))
                };
                assert_eq!(a.xor(b), xor, "{} xor {}", a, b);
            }
            let not = match to_x01(a) {
                U => U,
                Zero => One,
                One => Zero,
                _ => X,
            };
            assert_eq!(a.not(), not);
        }
    }

    #[test]
    fn resolve_basic() {
        assert_eq!(Zero.resolve(Z), Zero);
        assert_eq!(L.resolve(H), W);
        assert_eq!(One.resolve(Zero), X);
        assert_eq!(resolve_all([]), Z);
    }
}
