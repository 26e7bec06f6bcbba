//! Continuous piecewise-linear maps of a compact interval.

use std::fmt;
use std::str::FromStr;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, parse_rational, ratio, Interval, Rational};

pub const DEFAULT_PIECE_CAP: usize = 1 << 20;
pub const PIECE_CAP_ENV: &str = "PWLDYN_PIECE_CAP";

/// Piece cap for explicit iterates: `PWLDYN_PIECE_CAP` if set and valid, else 2^20.
pub fn piece_cap() -> usize {
    std::env::var(PIECE_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&c| c > 0)
        .unwrap_or(DEFAULT_PIECE_CAP)
}

/// A continuous map given by its graph nodes; linear between consecutive nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlMap {
    domain: Interval,
    nodes: Vec<(Rational, Rational)>,
    endomorphism: bool,
}

impl PwlMap {
    pub fn new(domain: Interval, nodes: Vec<(Rational, Rational)>) -> Result<Self> {
        let (first, last) = match (nodes.first(), nodes.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidMap("no nodes".into())),
        };
        if first.0 != domain.lo || last.0 != domain.hi {
            return Err(Error::InvalidMap(format!(
                "node endpoints {}..{} do not match domain {}",
                format_rational(&first.0),
                format_rational(&last.0),
                domain
            )));
        }
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidMap(
                "node x-coordinates must be strictly increasing".into(),
            ));
        }
        if nodes.len() == 1 && !domain.is_point() {
            return Err(Error::InvalidMap(
                "a single node needs a point domain".into(),
            ));
        }
        let endomorphism = nodes.iter().all(|(_, y)| domain.contains(y));
        Ok(PwlMap {
            domain,
            nodes,
            endomorphism,
        })
    }

    /// Domain taken from the first and last node.
    pub fn from_nodes(nodes: Vec<(Rational, Rational)>) -> Result<Self> {
        let domain = match (nodes.first(), nodes.last()) {
            (Some(f), Some(l)) => Interval::new(f.0.clone(), l.0.clone())?,
            _ => return Err(Error::InvalidMap("no nodes".into())),
        };
        PwlMap::new(domain, nodes)
    }

    pub fn identity(domain: &Interval) -> Self {
        let nodes = if domain.is_point() {
            vec![(domain.lo.clone(), domain.lo.clone())]
        } else {
            vec![
                (domain.lo.clone(), domain.lo.clone()),
                (domain.hi.clone(), domain.hi.clone()),
            ]
        };
        PwlMap::new(domain.clone(), nodes).expect("identity is well formed")
    }

    pub fn constant(domain: &Interval, c: Rational) -> Self {
        let nodes = if domain.is_point() {
            vec![(domain.lo.clone(), c)]
        } else {
            vec![(domain.lo.clone(), c.clone()), (domain.hi.clone(), c)]
        };
        PwlMap::new(domain.clone(), nodes).expect("constant map is well formed")
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn nodes(&self) -> &[(Rational, Rational)] {
        &self.nodes
    }

    pub fn is_endomorphism(&self) -> bool {
        self.endomorphism
    }

    pub fn piece_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Consecutive node pairs.
    pub fn pieces(&self) -> impl Iterator<Item = (&(Rational, Rational), &(Rational, Rational))> {
        self.nodes.iter().zip(self.nodes.iter().skip(1))
    }

    pub fn slopes(&self) -> impl Iterator<Item = Rational> + '_ {
        self.pieces()
            .map(|((x0, y0), (x1, y1))| (y1 - y0) / (x1 - x0))
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain {
                x: x.clone(),
                domain: Box::new(self.domain.clone()),
            });
        }
        Ok(self.eval_in_domain(x))
    }

    pub(crate) fn eval_in_domain(&self, x: &Rational) -> Rational {
        let i = self.nodes.partition_point(|(nx, _)| nx < x);
        if i < self.nodes.len() && &self.nodes[i].0 == x {
            return self.nodes[i].1.clone();
        }
        let (x0, y0) = &self.nodes[i - 1];
        let (x1, y1) = &self.nodes[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Exact `[min, max]` of the map over `window ∩ domain`.
    pub fn image(&self, window: &Interval) -> Option<Interval> {
        let w = window.intersect(&self.domain)?;
        let mut lo = self.eval_in_domain(&w.lo);
        let mut hi = lo.clone();
        let mut take = |y: Rational| {
            if y < lo {
                lo = y.clone();
            }
            if y > hi {
                hi = y;
            }
        };
        take(self.eval_in_domain(&w.hi));
        for (x, y) in &self.nodes {
            if w.lo < *x && *x < w.hi {
                take(y.clone());
            }
        }
        Some(Interval { lo, hi })
    }

    pub fn range(&self) -> Interval {
        self.image(&self.domain.clone())
            .expect("domain is nonempty")
    }

    /// The same map on `window ⊆ domain`.
    pub fn restrict(&self, window: &Interval) -> Result<PwlMap> {
        if !self.domain.contains_interval(window) {
            return Err(Error::InvalidParameter(format!(
                "window {} is not inside the domain {}",
                window, self.domain
            )));
        }
        let mut nodes = vec![(window.lo.clone(), self.eval_in_domain(&window.lo))];
        for (x, y) in &self.nodes {
            if window.lo < *x && *x < window.hi {
                nodes.push((x.clone(), y.clone()));
            }
        }
        if !window.is_point() {
            nodes.push((window.hi.clone(), self.eval_in_domain(&window.hi)));
        }
        PwlMap::new(window.clone(), nodes)
    }

    /// Drops interior nodes lying on the segment through their neighbours.
    pub fn simplified(&self) -> PwlMap {
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            while out.len() >= 2 {
                let (x0, y0) = &out[out.len() - 2];
                let (x1, y1) = &out[out.len() - 1];
                let collinear = (y1 - y0) * (&node.0 - x1) == (&node.1 - y1) * (x1 - x0);
                if collinear {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(node.clone());
        }
        PwlMap {
            domain: self.domain.clone(),
            nodes: out,
            endomorphism: self.endomorphism,
        }
    }

    /// Extensional equality: same domain and same values everywhere.
    pub fn same_function(&self, other: &PwlMap) -> bool {
        self.domain == other.domain && self.simplified().nodes == other.simplified().nodes
    }

    /// `outer ∘ inner`, with breakpoints at inner's nodes and at the preimages
    /// under inner of outer's node abscissae.
    pub fn compose(outer: &PwlMap, inner: &PwlMap) -> Result<PwlMap> {
        for (_, y) in &inner.nodes {
            if !outer.domain.contains(y) {
                return Err(Error::RangeViolation(y.clone()));
            }
        }
        let breaks: Vec<&Rational> = outer.nodes.iter().map(|(x, _)| x).collect();
        let mut nodes = Vec::with_capacity(inner.nodes.len() * 2);
        nodes.push((
            inner.nodes[0].0.clone(),
            outer.eval_in_domain(&inner.nodes[0].1),
        ));
        for ((x0, y0), (x1, y1)) in inner.pieces() {
            if y0 != y1 {
                let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
                let a = breaks.partition_point(|t| *t <= lo);
                let b = breaks.partition_point(|t| *t < hi);
                let slice = &breaks[a..b];
                let dx = x1 - x0;
                let dy = y1 - y0;
                let mut push = |t: &Rational| {
                    let x = x0 + (t - y0) * &dx / &dy;
                    let (_, oy) = &outer.nodes[outer.nodes.partition_point(|(nx, _)| nx < t)];
                    nodes.push((x, oy.clone()));
                };
                if y0 < y1 {
                    slice.iter().for_each(|t| push(t));
                } else {
                    slice.iter().rev().for_each(|t| push(t));
                }
            }
            nodes.push((x1.clone(), outer.eval_in_domain(y1)));
        }
        PwlMap::new(inner.domain.clone(), nodes)
    }

    /// `f^n` using the configured piece cap.
    pub fn iterate(&self, n: u32) -> Result<PwlMap> {
        self.iterate_with_cap(n, piece_cap())
    }

    pub fn iterate_with_cap(&self, n: u32, cap: usize) -> Result<PwlMap> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "iterate count must be positive".into(),
            ));
        }
        if n > 1 && !self.endomorphism {
            return Err(Error::InvalidMap(
                "iterating a map that leaves its domain".into(),
            ));
        }
        let mut acc = self.clone();
        check_cap(&acc, cap)?;
        for _ in 1..n {
            acc = PwlMap::compose(self, &acc)?;
            check_cap(&acc, cap)?;
        }
        Ok(acc)
    }
}

fn check_cap(f: &PwlMap, cap: usize) -> Result<()> {
    if f.piece_count() > cap {
        return Err(Error::PieceCap {
            pieces: f.piece_count(),
            cap,
        });
    }
    Ok(())
}

/// The tent map `1 - |2x - 1|` on [0,1].
pub fn tent() -> PwlMap {
    tent_scaled(&int(1)).expect("valid height")
}

/// `beta * (1 - |2x - 1|)` for `0 < beta <= 1`.
pub fn tent_scaled(beta: &Rational) -> Result<PwlMap> {
    if !beta.is_positive() || beta > &int(1) {
        return Err(Error::InvalidParameter(format!(
            "tent height must lie in (0,1], got {}",
            format_rational(beta)
        )));
    }
    PwlMap::new(
        Interval::unit(),
        vec![
            (int(0), int(0)),
            (ratio(1, 2), beta.clone()),
            (int(1), int(0)),
        ],
    )
}

/// The map with `x + 1/2` on [0,1/2] and `2 - 2x` on [1/2,1].
pub fn example_g() -> PwlMap {
    PwlMap::new(
        Interval::unit(),
        vec![
            (int(0), ratio(1, 2)),
            (ratio(1, 2), int(1)),
            (int(1), int(0)),
        ],
    )
    .expect("valid nodes")
}

/// `min(h, T(x))` for `0 < h <= 1`.
pub fn truncate_tent(h: &Rational) -> Result<PwlMap> {
    if !h.is_positive() || h > &int(1) {
        return Err(Error::InvalidParameter(format!(
            "truncation height must lie in (0,1], got {}",
            format_rational(h)
        )));
    }
    if h.is_one() {
        return Ok(tent());
    }
    let half = h / int(2);
    PwlMap::new(
        Interval::unit(),
        vec![
            (int(0), int(0)),
            (half.clone(), h.clone()),
            (int(1) - half, h.clone()),
            (int(1), int(0)),
        ],
    )
}

/// The tent map clamped into `[a, b]`, `0 < a < b < 1`.
pub fn doubly_truncate(a: &Rational, b: &Rational) -> Result<PwlMap> {
    if !(a.is_positive() && a < b && b < &int(1)) {
        return Err(Error::InvalidParameter(format!(
            "clamp bounds must satisfy 0 < a < b < 1, got a={} b={}",
            format_rational(a),
            format_rational(b)
        )));
    }
    let two = int(2);
    PwlMap::new(
        Interval::unit(),
        vec![
            (int(0), a.clone()),
            (a / &two, a.clone()),
            (b / &two, b.clone()),
            (int(1) - b / &two, b.clone()),
            (int(1) - a / &two, a.clone()),
            (int(1), a.clone()),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unimodality {
    StrictlyUnimodal,
    WeaklyUnimodal,
    NotUnimodal,
}

/// Slope-sign classification about the midpoint 1/2 of [0,1].
pub fn is_unimodal(f: &PwlMap) -> Unimodality {
    if *f.domain() != Interval::unit() {
        return Unimodality::NotUnimodal;
    }
    let half = ratio(1, 2);
    let mut strict = true;
    for (((x0, _), (x1, _)), s) in f.pieces().zip(f.slopes()) {
        let left = *x1 <= half;
        let right = *x0 >= half;
        let ok_strict = (left && s.is_positive()) || (right && s.is_negative());
        let ok_weak = (left && !s.is_negative()) || (right && !s.is_positive()) || s.is_zero();
        if !ok_weak {
            return Unimodality::NotUnimodal;
        }
        strict &= ok_strict;
    }
    if strict {
        Unimodality::StrictlyUnimodal
    } else {
        Unimodality::WeaklyUnimodal
    }
}

/// Maps reachable by name from the command line and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogMap {
    Tent,
    TentScaled(Rational),
    ExampleG,
    TruncatedTent(Rational),
    DoublyTruncated(Rational, Rational),
}

impl CatalogMap {
    pub fn build(&self) -> Result<PwlMap> {
        match self {
            CatalogMap::Tent => Ok(tent()),
            CatalogMap::TentScaled(b) => tent_scaled(b),
            CatalogMap::ExampleG => Ok(example_g()),
            CatalogMap::TruncatedTent(h) => truncate_tent(h),
            CatalogMap::DoublyTruncated(a, b) => doubly_truncate(a, b),
        }
    }
}

impl FromStr for CatalogMap {
    type Err = Error;

    /// `tent`, `example_g`, `tent_scaled:B`, `truncated_tent:H`, `doubly_truncated:A,B`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let one = |a: Option<&str>| -> Result<Rational> {
            parse_rational(
                a.ok_or_else(|| Error::InvalidParameter(format!("map {name} needs a parameter")))?,
            )
        };
        match name {
            "tent" => Ok(CatalogMap::Tent),
            "example_g" | "g" => Ok(CatalogMap::ExampleG),
            "tent_scaled" => Ok(CatalogMap::TentScaled(one(arg)?)),
            "truncated_tent" | "truncate_tent" => Ok(CatalogMap::TruncatedTent(one(arg)?)),
            "doubly_truncated" | "doubly_truncate" => {
                let a = arg
                    .ok_or_else(|| Error::InvalidParameter("doubly_truncated needs A,B".into()))?;
                let (lo, hi) = a
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidParameter("doubly_truncated needs A,B".into()))?;
                Ok(CatalogMap::DoublyTruncated(
                    parse_rational(lo)?,
                    parse_rational(hi)?,
                ))
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown catalog map {s:?}"
            ))),
        }
    }
}

/// Wire form: `{"domain": ["p/q","p/q"], "nodes": [["x","y"], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: [String; 2],
    pub nodes: Vec<[String; 2]>,
}

impl From<&PwlMap> for MapJson {
    fn from(f: &PwlMap) -> Self {
        MapJson {
            domain: [format_rational(&f.domain.lo), format_rational(&f.domain.hi)],
            nodes: f
                .nodes
                .iter()
                .map(|(x, y)| [format_rational(x), format_rational(y)])
                .collect(),
        }
    }
}

impl TryFrom<&MapJson> for PwlMap {
    type Error = Error;

    fn try_from(j: &MapJson) -> Result<PwlMap> {
        let domain = Interval::new(parse_rational(&j.domain[0])?, parse_rational(&j.domain[1])?)?;
        let nodes = j
            .nodes
            .iter()
            .map(|[x, y]| Ok((parse_rational(x)?, parse_rational(y)?)))
            .collect::<Result<Vec<_>>>()?;
        PwlMap::new(domain, nodes)
    }
}

impl Serialize for PwlMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PwlMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapJson::deserialize(d)?;
        PwlMap::try_from(&j).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PwlMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pwl on {} [", self.domain)?;
        for (i, (x, y)) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {})", format_rational(x), format_rational(y))?;
        }
        write!(f, "]")
    }
}
