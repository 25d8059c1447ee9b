use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed integer interval `lo..=hi`; empty when `lo > hi`.
///
/// Written as `"lo..hi"` (also accepted: `"lo:hi"` and a single `"v"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub const fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    pub const fn single(v: u64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.lo..=self.hi
    }

    pub fn contains(&self, v: u64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRanges(format!("cannot parse interval {s:?}"));
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let s = s.trim();
        let parts = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .or_else(|| s.split_once(':'));
        match parts {
            Some((lo, hi)) => Ok(Self::new(num(lo)?, num(hi)?)),
            None => Ok(Self::single(num(s)?)),
        }
    }
}

impl TryFrom<String> for Interval {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Interval> for String {
    fn from(i: Interval) -> Self {
        i.to_string()
    }
}

/// Search intervals for the primed layer hyper-parameters.
///
/// Kernel, stride and padding intervals apply to both modified conv layers
/// and to the pooling layer inserted by the pooled-conv1 approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumRanges {
    pub kernel: Interval,
    pub stride: Interval,
    pub padding: Interval,
    pub dilation: Interval,
}

impl Default for EnumRanges {
    /// Kernel 3..8, stride 1..5, padding 0..5, dilation 2..4.
    fn default() -> Self {
        Self {
            kernel: Interval::new(3, 8),
            stride: Interval::new(1, 5),
            padding: Interval::new(0, 5),
            dilation: Interval::new(2, 4),
        }
    }
}

impl EnumRanges {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, i: &Interval, min: u64| {
            if !i.is_empty() && i.lo < min {
                Err(Error::InvalidRanges(format!("{name} interval {i} must start at ≥ {min}")))
            } else {
                Ok(())
            }
        };
        check("kernel", &self.kernel, 1)?;
        check("stride", &self.stride, 1)?;
        check("dilation", &self.dilation, 1)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("3..8".parse::<Interval>().unwrap(), Interval::new(3, 8));
        assert_eq!("3..=8".parse::<Interval>().unwrap(), Interval::new(3, 8));
        assert_eq!("1:5".parse::<Interval>().unwrap(), Interval::new(1, 5));
        assert_eq!(" 4 ".parse::<Interval>().unwrap(), Interval::single(4));
        assert!("a..b".parse::<Interval>().is_err());
    }

    #[test]
    fn lower_bounds_enforced() {
        let mut r = EnumRanges::default();
        assert!(r.validate().is_ok());
        r.stride = Interval::new(0, 3);
        assert!(r.validate().is_err());
        r.stride = Interval::new(1, 3);
        r.dilation = Interval::new(0, 0);
        assert!(r.validate().is_err());
    }

    #[test]
    fn empty_interval_iterates_nothing() {
        assert_eq!(Interval::new(5, 4).iter().count(), 0);
        assert!(EnumRanges {
            stride: Interval::new(1, 0),
            ..Default::default()
        }
        .validate()
        .is_ok());
    }
}
