//! Exact scalars, closed intervals and canonical root sets.

use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Canonical `num/den`, rejecting a zero denominator.
pub fn rat_make(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
    let den = den.into();
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(num.into(), den))
}

/// Shorthand for literals in code and tests. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    rat_make(num, den).expect("literal rational with zero denominator")
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// `p/q` in lowest terms with `q > 0`; zero is `0/1`.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Accepts `p`, `p/q`, optional sign and surrounding whitespace.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::ParseRational(s.to_string());
    match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            rat_make(p, q)
        }
        None => {
            let p: BigInt = t.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

/// Decimal rendering rounded half away from zero to `sig` significant digits.
pub fn to_decimal(x: &Rational, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let a = x.abs();
    // Find e with 10^e <= a < 10^(e+1).
    let ten = BigInt::from(10);
    let mut e: i64 = (a.numer().to_string().len() as i64) - (a.denom().to_string().len() as i64);
    let pow = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(num::pow(ten.clone(), k as usize))
        } else {
            Rational::new(BigInt::one(), num::pow(ten.clone(), (-k) as usize))
        }
    };
    while a < pow(e) {
        e -= 1;
    }
    while a >= pow(e + 1) {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let scaled = &a * pow(shift);
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut digits = q;
    if BigInt::from(2) * r >= *scaled.denom() {
        digits += 1;
    }
    if digits.to_string().len() > sig {
        digits /= 10;
        e += 1;
    }
    let mut ds = digits.to_string();
    // Place the decimal point.
    let point = e + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), ds)
    } else if point as usize >= ds.len() {
        ds.push_str(&"0".repeat(point as usize - ds.len()));
        ds
    } else {
        let (l, r) = ds.split_at(point as usize);
        format!("{l}.{r}")
    };
    let body = if body.contains('.') {
        body.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        body
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub mod serde_rat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rat_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_rat_opt {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        x: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_rational(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Closed interval `[lo, hi]`; degenerate intervals are points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "serde_rat")]
    pub lo: Rational,
    #[serde(with = "serde_rat")]
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval bounds out of order: [{}, {}]",
                format_rational(&lo),
                format_rational(&hi)
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn unit() -> Self {
        Interval {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "[{}]", format_rational(&self.lo))
        } else {
            write!(
                f,
                "[{}, {}]",
                format_rational(&self.lo),
                format_rational(&self.hi)
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Min,
    Max,
}

/// Disjoint, strictly increasing closed components; touching components are merged.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RootSet {
    components: Vec<Interval>,
}

impl RootSet {
    pub fn empty() -> Self {
        RootSet::default()
    }

    pub fn canonicalize(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = intervals.into_iter().collect();
        v.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        RootSet { components: out }
    }

    pub fn from_points(points: impl IntoIterator<Item = Rational>) -> Self {
        Self::canonicalize(points.into_iter().map(Interval::point))
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// True when every component is a single point.
    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Interval::is_point)
    }

    /// The isolated points, or `None` when some component has positive length.
    pub fn points(&self) -> Option<Vec<Rational>> {
        self.is_finite()
            .then(|| self.components.iter().map(|c| c.lo.clone()).collect())
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.components.partition_point(|c| &c.hi < x);
        self.components.get(idx).is_some_and(|c| c.contains(x))
    }

    pub fn restrict(&self, window: &Interval) -> RootSet {
        RootSet {
            components: self
                .components
                .iter()
                .filter_map(|c| c.intersect(window))
                .collect(),
        }
    }

    pub fn union(&self, other: &RootSet) -> RootSet {
        RootSet::canonicalize(self.components.iter().chain(&other.components).cloned())
    }

    /// Least or greatest point of `self ∩ window`.
    pub fn extremal(&self, side: Side, window: &Interval) -> Option<Rational> {
        let r = self.restrict(window);
        match side {
            Side::Min => r.components.first().map(|c| c.lo.clone()),
            Side::Max => r.components.last().map(|c| c.hi.clone()),
        }
    }
}

impl fmt::Display for RootSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_reduces_and_normalizes_sign() {
        assert_eq!(rat_make(2, 4).unwrap(), ratio(1, 2));
        assert_eq!(rat_make(-3, -9).unwrap(), ratio(1, 3));
        assert_eq!(format_rational(&rat_make(11, 48).unwrap()), "11/48");
        assert_eq!(rat_make(1, 0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn string_form_round_trips() {
        for s in ["0/1", "1/1", "-7/24", "13/18"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(" 4/8 ").unwrap(), ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(to_decimal(&ratio(2, 3), 12), "0.666666666667");
        assert_eq!(to_decimal(&ratio(1, 2), 12), "0.5");
        assert_eq!(to_decimal(&int(0), 12), "0");
        assert_eq!(to_decimal(&ratio(-7, 24), 4), "-0.2917");
        assert_eq!(to_decimal(&ratio(1, 1), 12), "1");
        assert_eq!(to_decimal(&ratio(999_999, 1_000_000), 3), "1");
        assert_eq!(to_decimal(&ratio(1, 1000), 3), "0.001");
    }

    #[test]
    fn canonicalize_examples() {
        let p = |a, b| Interval::point(ratio(a, b));
        let rs = RootSet::canonicalize([p(1, 4), p(1, 8)]);
        assert_eq!(rs.components(), &[p(1, 8), p(1, 4)]);

        let rs = RootSet::canonicalize([
            Interval::new(int(0), ratio(1, 2)).unwrap(),
            Interval::new(ratio(1, 2), ratio(3, 4)).unwrap(),
        ]);
        assert_eq!(
            rs.components(),
            &[Interval::new(int(0), ratio(3, 4)).unwrap()]
        );

        let rs = RootSet::canonicalize([p(1, 3), p(1, 3)]);
        assert_eq!(rs.components(), &[p(1, 3)]);
    }

    #[test]
    fn extremal_examples() {
        let rs = RootSet::from_points([ratio(1, 24), ratio(11, 24), ratio(13, 24), ratio(23, 24)]);
        let w = Interval::new(ratio(1, 3), ratio(1, 2)).unwrap();
        assert_eq!(rs.extremal(Side::Min, &w), Some(ratio(11, 24)));

        let rs = RootSet::canonicalize([Interval::unit()]);
        let w = Interval::new(ratio(1, 4), ratio(1, 2)).unwrap();
        assert_eq!(rs.extremal(Side::Max, &w), Some(ratio(1, 2)));

        assert_eq!(
            RootSet::empty().extremal(Side::Min, &Interval::unit()),
            None
        );
    }
}
