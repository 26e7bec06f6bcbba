//! The Sharkovsky order and checks of the forcing theorem on concrete maps.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::{
    orbits_of_period_in, period_set_with, pick_smallest_diameter, smallest_diameter_orbit, Orbit,
};
use crate::pwl::{doubly_truncate, tent, PwlMap};
use crate::rational::{ratio, serde_rat, Interval, Rational};
use crate::solve::Solver;

/// `n = 2^two_exponent * odd_part`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharkovskyKey {
    pub two_exponent: u32,
    pub odd_part: u64,
}

impl SharkovskyKey {
    pub fn of(n: u64) -> SharkovskyKey {
        assert!(n >= 1, "Sharkovsky keys are defined for positive integers");
        let a = n.trailing_zeros();
        SharkovskyKey {
            two_exponent: a,
            odd_part: n >> a,
        }
    }

    pub fn value(&self) -> u64 {
        self.odd_part << self.two_exponent
    }

    /// Sort key: non-powers of two by `(a, b)`, then powers of two by falling exponent.
    fn rank(&self) -> (u8, u64, u64) {
        if self.odd_part > 1 {
            (0, self.two_exponent as u64, self.odd_part)
        } else {
            (1, u64::MAX - self.two_exponent as u64, 0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precedence {
    Precedes,
    Equals,
    Follows,
}

impl Precedence {
    pub fn symbol(&self) -> &'static str {
        match self {
            Precedence::Precedes => "≺",
            Precedence::Equals => "=",
            Precedence::Follows => "≻",
        }
    }
}

pub fn compare(m: u64, n: u64) -> Precedence {
    use std::cmp::Ordering::*;
    match SharkovskyKey::of(m)
        .rank()
        .cmp(&SharkovskyKey::of(n).rank())
    {
        Less => Precedence::Precedes,
        Equal => Precedence::Equals,
        Greater => Precedence::Follows,
    }
}

/// Every `n <= bound` with `m ≺ n`, in Sharkovsky order.
pub fn successors(m: u64, bound: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=bound)
        .filter(|&n| compare(m, n) == Precedence::Precedes)
        .collect();
    out.sort_by_key(|&n| SharkovskyKey::of(n).rank());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureViolation {
    pub have: u64,
    pub missing: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub period_set: Vec<u64>,
    pub violations: Vec<ClosureViolation>,
    pub pass: bool,
}

/// Checks that the periods up to `bound` are closed under `≺`.
pub fn verify_closure(f: &PwlMap, bound: u64) -> Result<ClosureReport> {
    let solver = Solver::new(f)?;
    let periods = period_set_with(&solver, bound)?;
    Ok(closure_report(&periods, bound))
}

pub fn closure_report(periods: &BTreeSet<u64>, bound: u64) -> ClosureReport {
    let mut violations = Vec::new();
    for &have in periods {
        for missing in successors(have, bound) {
            if !periods.contains(&missing) {
                violations.push(ClosureViolation { have, missing });
            }
        }
    }
    ClosureReport {
        period_set: periods.iter().copied().collect(),
        pass: violations.is_empty(),
        violations,
    }
}

/// The clamped tent over the smallest-diameter period-`k` orbit of the tent;
/// for `k = 1` the constant map at the interior fixed point 2/3.
pub fn minimal_witness_map(k: u64) -> Result<PwlMap> {
    if k == 0 {
        return Err(Error::InvalidParameter("period must be positive".into()));
    }
    if k == 1 {
        return Ok(PwlMap::constant(&Interval::unit(), ratio(2, 3)));
    }
    let orbit = smallest_diameter_orbit(&tent(), k)?;
    doubly_truncate(orbit.min(), orbit.max())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Power2Approx {
    pub map: PwlMap,
    #[serde(with = "serde_rat")]
    pub q0: Rational,
    #[serde(with = "serde_rat")]
    pub q1: Rational,
    pub chain: Vec<Orbit>,
}

/// Orbits of periods `3, 6, ..., 3 * 2^levels` of the tent, each the
/// smallest-diameter one inside the hull of the previous, and the tent
/// clamped to `[max of minima, min of maxima]`.
pub fn power2_map_approx(levels: u32) -> Result<Power2Approx> {
    if levels == 0 {
        return Err(Error::InvalidParameter("levels must be positive".into()));
    }
    let t = tent();
    let solver = Solver::new(&t)?;
    let mut chain = vec![smallest_diameter_orbit(&t, 3)?];
    for level in 1..=levels {
        let period = 3u64 << level;
        let hull = chain.last().expect("nonempty").hull();
        let inside = orbits_of_period_in(&solver, period, &hull)?;
        chain.push(pick_smallest_diameter(inside).ok_or(Error::NoOrbit(period))?);
    }
    let q0 = chain
        .iter()
        .map(|o| o.min().clone())
        .max()
        .expect("nonempty");
    let q1 = chain
        .iter()
        .map(|o| o.max().clone())
        .min()
        .expect("nonempty");
    Ok(Power2Approx {
        map: doubly_truncate(&q0, &q1)?,
        q0,
        q1,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::{orbits_of_period, period_set};
    use crate::pwl::truncate_tent;

    #[test]
    fn order_examples() {
        assert_eq!(compare(3, 5), Precedence::Precedes);
        assert_eq!(compare(14, 12), Precedence::Precedes);
        assert_eq!(compare(8, 4), Precedence::Precedes);
        assert_eq!(compare(1, 1), Precedence::Equals);
        assert_eq!(compare(2, 6), Precedence::Follows);
    }

    #[test]
    fn successor_lists() {
        assert_eq!(successors(3, 8), vec![5, 7, 6, 8, 4, 2, 1]);
        assert!(successors(1, 100).is_empty());
        assert_eq!(successors(4, 8), vec![2, 1]);
    }

    #[test]
    fn closure_on_catalog() {
        let r = verify_closure(&tent(), 6).unwrap();
        assert!(r.pass);
        assert_eq!(r.period_set, (1..=6).collect::<Vec<_>>());
        let r = verify_closure(&truncate_tent(&ratio(2, 3)).unwrap(), 6).unwrap();
        assert_eq!(r.period_set, vec![1]);
        assert!(r.pass);
    }

    #[test]
    fn witnesses() {
        assert_eq!(
            minimal_witness_map(3).unwrap(),
            doubly_truncate(&ratio(2, 7), &ratio(6, 7)).unwrap()
        );
        assert_eq!(
            minimal_witness_map(2).unwrap(),
            doubly_truncate(&ratio(2, 5), &ratio(4, 5)).unwrap()
        );
        let one = minimal_witness_map(1).unwrap();
        assert_eq!(period_set(&one, 6).unwrap(), [1].into_iter().collect());
        let w = minimal_witness_map(5).unwrap();
        assert_eq!(orbits_of_period(&w, 5).unwrap().len(), 1);
    }

    #[test]
    fn power2_first_level() {
        let a = power2_map_approx(1).unwrap();
        assert!(a.q0 <= ratio(2, 5) && ratio(4, 5) <= a.q1);
        assert!(a.q0 >= ratio(2, 7) && a.q1 <= ratio(6, 7));
        assert_eq!(a.map, doubly_truncate(&a.q0, &a.q1).unwrap());
    }
}
