//! Periodic points, orbits and least periods.

use std::collections::BTreeSet;

use num::integer::gcd;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwl::{is_unimodal, PwlMap, Unimodality};
use crate::rational::{format_rational, ratio, serde_rat, serde_rat_vec, Interval, Rational};
use crate::solve::Solver;

/// A periodic orbit: sorted points, least period and diameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    #[serde(with = "serde_rat_vec")]
    pub points: Vec<Rational>,
    pub least_period: u64,
    #[serde(with = "serde_rat")]
    pub diameter: Rational,
}

impl Orbit {
    fn from_points(mut points: Vec<Rational>) -> Orbit {
        points.sort();
        let diameter = points.last().expect("nonempty") - points.first().expect("nonempty");
        Orbit {
            least_period: points.len() as u64,
            points,
            diameter,
        }
    }

    /// The orbit of `x` under `f`, provided `x` is periodic with least period at most `bound`.
    pub fn of_point(f: &PwlMap, x: &Rational, bound: u64) -> Result<Orbit> {
        let mut points = vec![x.clone()];
        let mut y = f.eval(x)?;
        while &y != x {
            if points.len() as u64 >= bound {
                return Err(Error::NotAnOrbit(format!(
                    "{} does not return within {} steps",
                    format_rational(x),
                    bound
                )));
            }
            points.push(y.clone());
            y = f.eval(&y)?;
        }
        Ok(Orbit::from_points(points))
    }

    /// Checks that `points` form one cycle of `f`.
    pub fn from_cycle(f: &PwlMap, points: &[Rational]) -> Result<Orbit> {
        let first = points
            .first()
            .ok_or_else(|| Error::NotAnOrbit("empty point list".into()))?;
        let orbit = Orbit::of_point(f, first, points.len() as u64)?;
        let mut given = points.to_vec();
        given.sort();
        given.dedup();
        if given != orbit.points {
            return Err(Error::NotAnOrbit(format!(
                "the cycle through {} is {:?}",
                format_rational(first),
                orbit.points.iter().map(format_rational).collect::<Vec<_>>()
            )));
        }
        Ok(orbit)
    }

    pub fn min(&self) -> &Rational {
        self.points.first().expect("nonempty")
    }

    pub fn max(&self) -> &Rational {
        self.points.last().expect("nonempty")
    }

    pub fn hull(&self) -> Interval {
        Interval {
            lo: self.min().clone(),
            hi: self.max().clone(),
        }
    }
}

/// Least `t` with `f^t(x) = x`, or `None` when `f^n(x) != x`.
pub fn least_period(f: &PwlMap, x: &Rational, n: u64) -> Option<u64> {
    if n == 0 || !f.domain().contains(x) {
        return None;
    }
    let mut y = x.clone();
    let mut first = None;
    for t in 1..=n {
        y = f.eval_in_domain(&y);
        if first.is_none() && &y == x {
            first = Some(t);
        }
    }
    if &y != x {
        return None;
    }
    let t = first.expect("f^n(x) = x was observed");
    assert_eq!(n % t, 0, "least period must divide n");
    Some(t)
}

/// Orbits of least period exactly `n` whose points all lie in `window`,
/// ordered by minimum point.
pub fn orbits_of_period_in(solver: &Solver, n: u64, window: &Interval) -> Result<Vec<Orbit>> {
    let k = u32::try_from(n).map_err(|_| Error::InvalidParameter("period too large".into()))?;
    let roots = solver.fixed(k, window)?;
    let points = roots.points().ok_or(Error::InfinitePeriodicSet(n))?;
    let f = solver.map();
    let mut seen: BTreeSet<Rational> = BTreeSet::new();
    let mut orbits = Vec::new();
    for x in &points {
        if seen.contains(x) {
            continue;
        }
        let t = least_period(f, x, n).ok_or_else(|| Error::OrbitWalk(x.clone()))?;
        if t != n {
            continue;
        }
        let orbit = Orbit::of_point(f, x, n)?;
        if orbit.points.len() as u64 != n {
            return Err(Error::OrbitWalk(x.clone()));
        }
        let inside = orbit.points.iter().all(|p| window.contains(p));
        for p in &orbit.points {
            if inside && !roots.contains(p) {
                return Err(Error::OrbitWalk(p.clone()));
            }
            seen.insert(p.clone());
        }
        if inside {
            orbits.push(orbit);
        }
    }
    orbits.sort_by(|a, b| a.min().cmp(b.min()));
    Ok(orbits)
}

/// All orbits of least period exactly `n`, ordered by minimum point.
pub fn orbits_of_period(f: &PwlMap, n: u64) -> Result<Vec<Orbit>> {
    let solver = Solver::new(f)?;
    orbits_of_period_in(&solver, n, f.domain())
}

/// Periods `n <= bound` that occur.
pub fn period_set(f: &PwlMap, bound: u64) -> Result<BTreeSet<u64>> {
    let solver = Solver::new(f)?;
    period_set_with(&solver, bound)
}

pub fn period_set_with(solver: &Solver, bound: u64) -> Result<BTreeSet<u64>> {
    let domain = solver.map().domain().clone();
    let mut out = BTreeSet::new();
    for n in 1..=bound {
        if !orbits_of_period_in(solver, n, &domain)?.is_empty() {
            out.insert(n);
        }
    }
    Ok(out)
}

/// Smallest diameter wins; ties go to the smaller minimum point.
pub fn pick_smallest_diameter(orbits: Vec<Orbit>) -> Option<Orbit> {
    orbits.into_iter().min_by(|a, b| {
        a.diameter
            .cmp(&b.diameter)
            .then_with(|| a.min().cmp(b.min()))
    })
}

pub fn smallest_diameter_orbit(f: &PwlMap, n: u64) -> Result<Orbit> {
    pick_smallest_diameter(orbits_of_period(f, n)?).ok_or(Error::NoOrbit(n))
}

/// Least value of `max Q` over period-`m` orbits `Q`.
pub fn h_value(f: &PwlMap, m: u64) -> Result<Rational> {
    orbits_of_period(f, m)?
        .iter()
        .map(|o| o.max().clone())
        .min()
        .ok_or(Error::NoOrbit(m))
}

/// Least period under `f^n` of a point with least period `m` under `f`.
pub fn iterate_period(m: u64, n: u64) -> u64 {
    m / gcd(m, n)
}

/// Candidate least periods under `f` of a point with least period `k` under `f^n`.
pub fn lift_periods(k: u64, n: u64) -> BTreeSet<u64> {
    (1..=n)
        .filter(|s| n.is_multiple_of(*s) && gcd(*s, k) == 1)
        .map(|s| k * n / s)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedPair {
    pub inner: Interval,
    pub outer: Interval,
    pub nested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedReport {
    pub unimodality: Unimodality,
    pub orbits: Vec<Orbit>,
    pub pairs: Vec<NestedPair>,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// For orbits of least period 2..=`bound`: hulls are nested by their maxima,
/// `f(max P) = min P`, and `min P <= 1/2 <= max P`.
pub fn verify_nested(f: &PwlMap, bound: u64) -> Result<NestedReport> {
    let unimodality = is_unimodal(f);
    if unimodality == Unimodality::NotUnimodal {
        return Err(Error::NotUnimodal);
    }
    let solver = Solver::new(f)?;
    let mut orbits = Vec::new();
    for n in 2..=bound {
        orbits.extend(orbits_of_period_in(&solver, n, f.domain())?);
    }
    let half = ratio(1, 2);
    let mut violations = Vec::new();
    for o in &orbits {
        let image = f.eval(o.max())?;
        if &image != o.min() {
            violations.push(format!(
                "period {} orbit at {}: f(max) = {} but min = {}",
                o.least_period,
                o.hull(),
                format_rational(&image),
                format_rational(o.min())
            ));
        }
        if !(o.min() <= &half && &half <= o.max()) {
            violations.push(format!(
                "period {} orbit hull {} misses 1/2",
                o.least_period,
                o.hull()
            ));
        }
    }
    let mut pairs = Vec::new();
    for p in &orbits {
        for q in &orbits {
            if p.max() < q.max() {
                let nested = q.min() <= p.min();
                if !nested {
                    violations.push(format!("hull {} is not inside {}", p.hull(), q.hull()));
                }
                pairs.push(NestedPair {
                    inner: p.hull(),
                    outer: q.hull(),
                    nested,
                });
            }
        }
    }
    Ok(NestedReport {
        unimodality,
        orbits,
        pass: violations.is_empty(),
        pairs,
        violations,
    })
}
