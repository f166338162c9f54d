//! Simulation timestamps.

use std::fmt;
use std::ops::Add;

/// A point in simulation time: physical femtoseconds plus delta and epsilon
/// sub-steps.
///
/// Ordering is lexicographic on `(fs, delta, epsilon)`; the derived `Ord`
/// relies on the field order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct TimeValue {
    pub fs: u64,
    pub delta: u32,
    pub epsilon: u32,
}

/// Time units understood by the text format, largest first.
pub const TIME_UNITS: [(&str, u64); 6] = [
    ("s", 1_000_000_000_000_000),
    ("ms", 1_000_000_000_000),
    ("us", 1_000_000_000),
    ("ns", 1_000_000),
    ("ps", 1_000),
    ("fs", 1),
];

impl TimeValue {
    pub const ZERO: TimeValue = TimeValue {
        fs: 0,
        delta: 0,
        epsilon: 0,
    };

    pub fn new(fs: u64, delta: u32, epsilon: u32) -> TimeValue {
        TimeValue { fs, delta, epsilon }
    }

    pub fn from_fs(fs: u64) -> TimeValue {
        TimeValue::new(fs, 0, 0)
    }

    pub fn from_ns(ns: u64) -> TimeValue {
        TimeValue::from_fs(ns * 1_000_000)
    }

    pub fn is_zero(&self) -> bool {
        *self == TimeValue::ZERO
    }

    /// Timestamp at which an event scheduled now with `delay` takes effect.
    ///
    /// A zero delay still advances by one delta step so that cause always
    /// precedes effect.
    pub fn schedule(self, delay: TimeValue) -> TimeValue {
        if delay.is_zero() {
            TimeValue::new(self.fs, self.delta + 1, 0)
        } else {
            self + delay
        }
    }
}

/// Componentwise addition. A nonzero physical part restarts the delta and
/// epsilon counters, and a nonzero delta part restarts the epsilon counter.
impl Add for TimeValue {
    type Output = TimeValue;

    fn add(self, d: TimeValue) -> TimeValue {
        if d.fs > 0 {
            TimeValue::new(self.fs + d.fs, d.delta, d.epsilon)
        } else if d.delta > 0 {
            TimeValue::new(self.fs, self.delta + d.delta, d.epsilon)
        } else {
            TimeValue::new(self.fs, self.delta, self.epsilon + d.epsilon)
        }
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        if self.fs == 0 {
            write!(f, "0s")?;
        } else {
            let (unit, scale) = TIME_UNITS
                .iter()
                .find(|(_, scale)| self.fs % scale == 0)
                .expect("fs divides every value");
            write!(f, "{}{}", self.fs / scale, unit)?;
        }
        if self.delta != 0 {
            write!(f, " {}d", self.delta)?;
        }
        if self.epsilon != 0 {
            write!(f, " {}e", self.epsilon)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display() {
        assert_eq!(TimeValue::from_ns(2).to_string(), "2ns");
        assert_eq!(TimeValue::new(0, 1, 0).to_string(), "0s 1d");
        assert_eq!(TimeValue::new(1500, 0, 3).to_string(), "1500fs 3e");
        assert_eq!(TimeValue::from_fs(3_000_000_000).to_string(), "3us");
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = vec![
            TimeValue::new(1, 0, 0),
            TimeValue::new(0, 2, 0),
            TimeValue::new(0, 1, 5),
            TimeValue::new(0, 1, 0),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                TimeValue::new(0, 1, 0),
                TimeValue::new(0, 1, 5),
                TimeValue::new(0, 2, 0),
                TimeValue::new(1, 0, 0),
            ]
        );
    }

    #[test]
    fn addition_resets_substeps() {
        let now = TimeValue::new(10, 3, 2);
        assert_eq!(now + TimeValue::from_fs(5), TimeValue::new(15, 0, 0));
        assert_eq!(now + TimeValue::new(0, 1, 0), TimeValue::new(10, 4, 0));
        assert_eq!(now + TimeValue::new(0, 0, 1), TimeValue::new(10, 3, 3));
        assert_eq!(now.schedule(TimeValue::ZERO), TimeValue::new(10, 4, 0));
    }
}
