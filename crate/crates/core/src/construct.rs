//! Landmark points attached to an odd-period orbit and the first tower layer.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::{least_period, Orbit};
use crate::pwl::PwlMap;
use crate::rational::{format_rational, serde_rat, Interval, Rational, Side};
use crate::solve::Solver;

/// Equation exponents above this are not solved unless configured otherwise.
pub const DEFAULT_MAX_EXPONENT: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Base,
    Tilde,
    Plain,
    Breve,
    Hat,
    Bar,
}

impl Family {
    pub const TOWER: [Family; 5] = [
        Family::Tilde,
        Family::Plain,
        Family::Breve,
        Family::Hat,
        Family::Bar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Base => "base",
            Family::Tilde => "tilde",
            Family::Plain => "plain",
            Family::Breve => "breve",
            Family::Hat => "hat",
            Family::Bar => "bar",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Family::Base]
            .into_iter()
            .chain(Family::TOWER)
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    MinP,
    E,
    V,
    Z,
    Y,
    Z0,
    D,
    BreveU0,
    HatU0,
    Q,
    P,
    C,
    CPrime,
    CStar,
    Mu,
    MuPrime,
    U,
    UPrime,
    Nu,
}

const KIND_NAMES: [(Kind, &str); 19] = [
    (Kind::MinP, "min_p"),
    (Kind::E, "e"),
    (Kind::V, "v"),
    (Kind::Z, "z"),
    (Kind::Y, "y"),
    (Kind::Z0, "z0"),
    (Kind::D, "d"),
    (Kind::BreveU0, "breve_u0"),
    (Kind::HatU0, "hat_u0"),
    (Kind::Q, "q"),
    (Kind::P, "p"),
    (Kind::C, "c"),
    (Kind::CPrime, "c'"),
    (Kind::CStar, "c'*"),
    (Kind::Mu, "mu"),
    (Kind::MuPrime, "mu'"),
    (Kind::U, "u"),
    (Kind::UPrime, "u'"),
    (Kind::Nu, "nu"),
];

impl Kind {
    pub fn name(&self) -> &'static str {
        KIND_NAMES
            .iter()
            .find(|(k, _)| k == self)
            .map(|(_, n)| *n)
            .expect("every kind is named")
    }

    pub fn is_periodic(&self) -> bool {
        matches!(
            self,
            Kind::Q | Kind::P | Kind::C | Kind::CPrime | Kind::CStar
        )
    }
}

/// A point's tag: family, kind and index tuple `(n)`, `(n,k)` or `(n,k,i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub family: Family,
    pub kind: Kind,
    pub index: Vec<u64>,
}

impl Label {
    pub fn new(family: Family, kind: Kind, index: &[u64]) -> Label {
        Label {
            family,
            kind,
            index: index.to_vec(),
        }
    }

    pub fn base(kind: Kind) -> Label {
        Label::new(Family::Base, kind, &[])
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family == Family::Base {
            return f.write_str(self.kind.name());
        }
        let idx: Vec<String> = self.index.iter().map(u64::to_string).collect();
        write!(f, "{}.{}[{}]", self.family, self.kind.name(), idx.join(","))
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed label {s:?}"));
        let kind_of = |name: &str| {
            KIND_NAMES
                .iter()
                .find(|(_, n)| *n == name)
                .map(|(k, _)| *k)
                .ok_or_else(bad)
        };
        let Some((family, rest)) = s.split_once('.') else {
            return Ok(Label::base(kind_of(s)?));
        };
        let (kind, idx) = rest
            .strip_suffix(']')
            .and_then(|r| r.split_once('['))
            .ok_or_else(bad)?;
        let index = if idx.is_empty() {
            Vec::new()
        } else {
            idx.split(',')
                .map(|t| t.parse::<u64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Label {
            family: family.parse()?,
            kind: kind_of(kind)?,
            index,
        })
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A claimed least period. Guaranteed claims must hold exactly; claims with
/// fallbacks accept any listed alternative; the rest are informational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub period: u64,
    pub guaranteed: bool,
    pub fallbacks: Vec<u64>,
}

impl Claim {
    pub fn guaranteed(period: u64) -> Claim {
        Claim {
            period,
            guaranteed: true,
            fallbacks: Vec::new(),
        }
    }

    pub fn informational(period: u64) -> Claim {
        Claim {
            period,
            guaranteed: false,
            fallbacks: Vec::new(),
        }
    }

    pub fn with_fallbacks(period: u64, fallbacks: &[u64]) -> Claim {
        Claim {
            period,
            guaranteed: false,
            fallbacks: fallbacks.to_vec(),
        }
    }

    pub fn gated(period: u64, guaranteed: bool) -> Claim {
        if guaranteed {
            Claim::guaranteed(period)
        } else {
            Claim::informational(period)
        }
    }

    pub fn is_checked(&self) -> bool {
        self.guaranteed || !self.fallbacks.is_empty()
    }

    pub fn accepts(&self, actual: Option<u64>) -> bool {
        match actual {
            None => false,
            Some(a) if self.guaranteed && self.fallbacks.is_empty() => a == self.period,
            Some(a) if !self.fallbacks.is_empty() => {
                a == self.period || self.fallbacks.contains(&a)
            }
            Some(_) => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub label: Label,
    #[serde(with = "serde_rat")]
    pub value: Rational,
    /// Exponent of the defining equation; 0 for base points.
    pub exponent: u64,
    pub claim: Option<Claim>,
    pub least_period: Option<u64>,
    pub verified: bool,
}

impl LabeledPoint {
    pub fn landmark(label: Label, value: Rational, exponent: u64) -> LabeledPoint {
        LabeledPoint {
            label,
            value,
            exponent,
            claim: None,
            least_period: None,
            verified: true,
        }
    }

    /// A root of `f^exponent(x) = x`, with its least period computed by walking the orbit.
    pub fn periodic(
        f: &PwlMap,
        label: Label,
        value: Rational,
        exponent: u64,
        claim: Claim,
    ) -> LabeledPoint {
        let actual = least_period(f, &value, exponent);
        LabeledPoint {
            label,
            verified: claim.accepts(actual),
            value,
            exponent,
            claim: Some(claim),
            least_period: actual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPoint {
    pub label: Label,
    pub exponent: u64,
    pub window: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub name: String,
    pub text: String,
    pub holds: bool,
    pub violations: Vec<String>,
}

/// An ordering chain `a < b <= c < ...`; absent items are skipped and the
/// relation across them is strict if any skipped relation was.
#[derive(Debug, Clone)]
pub struct Chain {
    name: String,
    items: Vec<(String, Rational, bool)>,
    pending_strict: bool,
}

impl Chain {
    pub fn new(name: impl Into<String>) -> Chain {
        Chain {
            name: name.into(),
            items: Vec::new(),
            pending_strict: false,
        }
    }

    fn push(mut self, strict: bool, label: impl fmt::Display, value: Option<&Rational>) -> Chain {
        self.pending_strict |= strict;
        if let Some(v) = value {
            self.items
                .push((label.to_string(), v.clone(), self.pending_strict));
            self.pending_strict = false;
        }
        self
    }

    pub fn start(self, label: impl fmt::Display, value: Option<&Rational>) -> Chain {
        self.push(false, label, value)
    }

    pub fn lt(self, label: impl fmt::Display, value: Option<&Rational>) -> Chain {
        self.push(true, label, value)
    }

    pub fn le(self, label: impl fmt::Display, value: Option<&Rational>) -> Chain {
        self.push(false, label, value)
    }

    pub fn check(self) -> ChainReport {
        let mut text = String::new();
        let mut violations = Vec::new();
        for (i, (label, value, strict)) in self.items.iter().enumerate() {
            if i > 0 {
                text.push_str(if *strict { " < " } else { " <= " });
                let (prev_label, prev, _) = &self.items[i - 1];
                let ok = if *strict { prev < value } else { prev <= value };
                if !ok {
                    violations.push(format!(
                        "{} = {} vs {} = {}",
                        prev_label,
                        format_rational(prev),
                        label,
                        format_rational(value)
                    ));
                }
            }
            text.push_str(label);
        }
        ChainReport {
            name: self.name,
            text,
            holds: violations.is_empty(),
            violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardCheck {
    pub name: String,
    pub window: Interval,
    pub holds: bool,
}

/// Points, chains and guards produced by one construction step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointReport {
    pub points: Vec<LabeledPoint>,
    pub missing: Vec<MissingPoint>,
    pub skipped: Vec<Label>,
    pub chains: Vec<ChainReport>,
    pub guards: Vec<GuardCheck>,
}

impl PointReport {
    pub fn pass(&self) -> bool {
        self.missing.is_empty()
            && self.points.iter().all(|p| p.verified)
            && self.chains.iter().all(|c| c.holds)
            && self.guards.iter().all(|g| g.holds)
    }

    pub fn get(&self, label: &Label) -> Option<&Rational> {
        self.points
            .iter()
            .find(|p| &p.label == label)
            .map(|p| &p.value)
    }

    pub fn extend(&mut self, other: PointReport) {
        self.points.extend(other.points);
        self.missing.extend(other.missing);
        self.skipped.extend(other.skipped);
        self.chains.extend(other.chains);
        self.guards.extend(other.guards);
    }
}

/// `lhs(x) < rhs(x)` (or `<=`) for every `x` in the window, with optional open
/// ends. Both functions are linear between their nodes, so checking merged
/// nodes and the midpoints between them is exact.
pub fn holds_below(
    lhs: &PwlMap,
    rhs: &PwlMap,
    window: &Interval,
    open: (bool, bool),
    strict: bool,
) -> bool {
    if window.is_point() && (open.0 || open.1) {
        return true;
    }
    let mut xs: Vec<Rational> = vec![window.lo.clone(), window.hi.clone()];
    for g in [lhs, rhs] {
        xs.extend(
            g.nodes()
                .iter()
                .map(|(x, _)| x)
                .filter(|x| window.lo < **x && **x < window.hi)
                .cloned(),
        );
    }
    xs.sort();
    xs.dedup();
    let gap = |x: &Rational| rhs.eval_in_domain(x) - lhs.eval_in_domain(x);
    for (i, x) in xs.iter().enumerate() {
        let endpoint_open = (i == 0 && open.0) || (i == xs.len() - 1 && open.1);
        let g = gap(x);
        let ok = if strict && !endpoint_open {
            g.is_positive()
        } else {
            !g.is_negative()
        };
        if !ok {
            return false;
        }
    }
    if strict {
        for w in xs.windows(2) {
            let mid = (&w[0] + &w[1]) / Rational::from_integer(2.into());
            if !gap(&mid).is_positive() {
                return false;
            }
        }
    }
    true
}

/// Base landmarks for an odd-period orbit of a map.
#[derive(Debug, Clone)]
pub struct ConstructionContext {
    solver: Arc<Solver>,
    pub orbit: Orbit,
    pub period: u64,
    pub min_p: Rational,
    pub max_p: Rational,
    pub e: Rational,
    pub v: Rational,
    pub z: Rational,
    pub y: Rational,
    pub z0: Rational,
    pub d: Rational,
    pub breve_u0: Rational,
    pub hat_u0: Rational,
    pub guards: Vec<GuardCheck>,
    pub max_exponent: u64,
}

pub(crate) fn to_exp(k: u64) -> Result<u32> {
    u32::try_from(k).map_err(|_| Error::InvalidParameter(format!("exponent {k} too large")))
}

/// Outcome of searching for a periodic point.
pub(crate) enum Found {
    Point(LabeledPoint),
    Missing(MissingPoint),
    Skipped(Label),
}

impl PointReport {
    pub(crate) fn take(&mut self, found: Found) -> Option<Rational> {
        match found {
            Found::Point(p) => {
                let v = p.value.clone();
                self.points.push(p);
                Some(v)
            }
            Found::Missing(m) => {
                self.missing.push(m);
                None
            }
            Found::Skipped(l) => {
                self.skipped.push(l);
                None
            }
        }
    }
}

/// Builds the context for the orbit through `points`.
pub fn base_context(f: &PwlMap, points: &[Rational]) -> Result<ConstructionContext> {
    let orbit = Orbit::from_cycle(f, points)?;
    ConstructionContext::new(f, orbit)
}

impl ConstructionContext {
    pub fn new(f: &PwlMap, orbit: Orbit) -> Result<ConstructionContext> {
        let m = orbit.least_period;
        if m < 3 || m.is_multiple_of(2) {
            return Err(Error::UnsupportedPeriod(m));
        }
        let solver = Arc::new(Solver::new(f)?);
        let min_p = orbit.min().clone();
        let max_p = orbit.max().clone();
        let mut e = min_p.clone();
        for _ in 1..m {
            e = f.eval(&e)?;
        }
        let need =
            |name: &str, r: Option<Rational>| r.ok_or_else(|| Error::EmptyWindow(name.into()));
        let win = |name: &str, lo: &Rational, hi: &Rational| {
            Interval::new(lo.clone(), hi.clone()).map_err(|_| Error::EmptyWindow(name.into()))
        };

        let w = win("v", &min_p, &e)?;
        let v = need("v", solver.extremal_eq(Side::Min, 1, &e, &w)?)?;
        let w = win("z", &v, &e)?;
        let z = need("z", solver.extremal_fixed(Side::Min, 1, &w)?)?;
        let w = win("y", &min_p, &v)?;
        let y = need("y", solver.extremal_fixed(Side::Max, 2, &w)?)?;
        let w = win("z0", &v, &z)?;
        let z0 = need("z0", solver.extremal_fixed(Side::Min, 2, &w)?)?;
        let w = win("d", &min_p, &v)?;
        let d = need("d", solver.extremal_eq(Side::Max, 2, &z0, &w)?)?;
        let w = win("breve_u0", &d, &v)?;
        let breve_u0 = need("breve_u0", solver.extremal_eq(Side::Max, 2, &d, &w)?)?;
        let w = win("hat_u0", &v, &z0)?;
        let hat_u0 = need("hat_u0", solver.extremal_eq(Side::Min, 2, &d, &w)?)?;

        let mut ctx = ConstructionContext {
            solver,
            orbit,
            period: m,
            min_p,
            max_p,
            e,
            v,
            z,
            y,
            z0,
            d,
            breve_u0,
            hat_u0,
            guards: Vec::new(),
            max_exponent: DEFAULT_MAX_EXPONENT,
        };
        ctx.check_invariants()?;
        ctx.guards = ctx.base_guards()?;
        Ok(ctx)
    }

    pub fn with_max_exponent(mut self, max_exponent: u64) -> Self {
        self.max_exponent = max_exponent;
        self
    }

    pub fn map(&self) -> &PwlMap {
        self.solver.map()
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    fn check_invariants(&self) -> Result<()> {
        let f = self.map();
        let chain = Chain::new("base ordering")
            .start("min P", Some(&self.min_p))
            .lt("d", Some(&self.d))
            .lt("v", Some(&self.v))
            .lt("z0", Some(&self.z0))
            .le("z", Some(&self.z))
            .lt("e", Some(&self.e))
            .le("max P", Some(&self.max_p))
            .check();
        if !chain.holds {
            return Err(Error::Invariant(chain.violations.join("; ")));
        }
        let mut problems = Vec::new();
        if !(self.min_p <= self.y && self.y < self.v) {
            problems.push("y outside [min P, v)".to_string());
        }
        if f.eval(&self.y)? == self.y {
            problems.push("y is a fixed point".to_string());
        }
        if !(self.d <= self.breve_u0 && self.breve_u0 <= self.v) {
            problems.push("breve_u0 outside [d, v]".to_string());
        }
        if !(self.v <= self.hat_u0 && self.hat_u0 <= self.z0) {
            problems.push("hat_u0 outside [v, z0]".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Invariant(problems.join("; ")))
        }
    }

    pub(crate) fn interval(&self, what: &str, lo: &Rational, hi: &Rational) -> Result<Interval> {
        Interval::new(lo.clone(), hi.clone()).map_err(|_| Error::EmptyWindow(what.into()))
    }

    fn constant(&self, window: &Interval, c: &Rational) -> PwlMap {
        PwlMap::constant(window, c.clone())
    }

    fn iterate_on(&self, k: u64, window: &Interval) -> Result<Arc<PwlMap>> {
        if k == 0 {
            return Ok(Arc::new(PwlMap::identity(window)));
        }
        self.solver.iterate_on(to_exp(k)?, window)
    }

    fn base_guards(&self) -> Result<Vec<GuardCheck>> {
        let mut out = Vec::new();
        let w = self.interval("guard", &self.v, &self.z0)?;
        let f2 = self.iterate_on(2, &w)?;
        out.push(GuardCheck {
            name: "f^2(x) < x on [v, z0)".into(),
            holds: holds_below(&f2, &PwlMap::identity(&w), &w, (false, true), true),
            window: w,
        });
        let w = self.interval("guard", &self.d, &self.z0)?;
        let f1 = self.iterate_on(1, &w)?;
        let f2 = self.iterate_on(2, &w)?;
        out.push(GuardCheck {
            name: "f^2(x) < z0 on (d, z0)".into(),
            holds: holds_below(&f2, &self.constant(&w, &self.z0), &w, (true, true), true),
            window: w.clone(),
        });
        out.push(GuardCheck {
            name: "z < f(x) on (d, z0)".into(),
            holds: holds_below(&self.constant(&w, &self.z), &f1, &w, (true, true), true),
            window: w,
        });
        Ok(out)
    }

    /// Extremal root of `f^k(x) = c` on `[lo, hi]`.
    pub fn root_eq(
        &self,
        side: Side,
        k: u64,
        c: &Rational,
        lo: &Rational,
        hi: &Rational,
    ) -> Result<Option<Rational>> {
        if lo > hi {
            return Ok(None);
        }
        let w = Interval::new(lo.clone(), hi.clone())?;
        self.solver.extremal_eq(side, to_exp(k)?, c, &w)
    }

    /// Extremal root of `f^k(x) = x` on `[lo, hi]`.
    pub fn root_fixed(
        &self,
        side: Side,
        k: u64,
        lo: &Rational,
        hi: &Rational,
    ) -> Result<Option<Rational>> {
        if lo > hi {
            return Ok(None);
        }
        let w = Interval::new(lo.clone(), hi.clone())?;
        self.solver.extremal_fixed(side, to_exp(k)?, &w)
    }

    /// A scaffolding root of `f^k(x) = d` that must exist.
    pub(crate) fn d_point(
        &self,
        label: &Label,
        side: Side,
        k: u64,
        lo: &Rational,
        hi: &Rational,
    ) -> Result<Rational> {
        self.root_eq(side, k, &self.d, lo, hi)?.ok_or_else(|| {
            Error::EmptyWindow(format!(
                "{label}: f^{k}(x) = d on [{}, {}]",
                format_rational(lo),
                format_rational(hi)
            ))
        })
    }

    /// A periodic point `side{lo <= x <= hi : f^k(x) = x}` with its verified least period.
    pub(crate) fn periodic(
        &self,
        label: Label,
        side: Side,
        k: u64,
        lo: &Rational,
        hi: &Rational,
        claim: Claim,
    ) -> Result<Found> {
        if k > self.max_exponent {
            return Ok(Found::Skipped(label));
        }
        Ok(match self.root_fixed(side, k, lo, hi)? {
            Some(x) => Found::Point(LabeledPoint::periodic(self.map(), label, x, k, claim)),
            None => Found::Missing(MissingPoint {
                label,
                exponent: k,
                window: format!("[{}, {}]", format_rational(lo), format_rational(hi)),
            }),
        })
    }

    /// `u_n = min{d <= x <= v : f^{2n}(x) = d}`.
    pub fn u(&self, n: u64) -> Result<Rational> {
        self.d_point(
            &Label::new(Family::Plain, Kind::U, &[n]),
            Side::Min,
            2 * n,
            &self.d,
            &self.v,
        )
    }

    /// `max{v <= x <= z0 : f^{2n}(x) = d}`.
    pub fn bar_u_prime(&self, n: u64) -> Result<Rational> {
        self.d_point(
            &Label::new(Family::Bar, Kind::UPrime, &[n]),
            Side::Max,
            2 * n,
            &self.v,
            &self.z0,
        )
    }

    /// `max{min P <= x <= d : f^{m+2n}(x) = d}`, defined for `n >= 0`.
    pub fn tilde_mu_prime(&self, n: u64) -> Result<Rational> {
        self.d_point(
            &Label::new(Family::Tilde, Kind::MuPrime, &[n]),
            Side::Max,
            self.period + 2 * n,
            &self.min_p,
            &self.d,
        )
    }

    /// `min{breve_u0 <= x <= v : f^{m+2n}(x) = d}`.
    pub fn breve_mu(&self, n: u64) -> Result<Rational> {
        self.d_point(
            &Label::new(Family::Breve, Kind::Mu, &[n]),
            Side::Min,
            self.period + 2 * n,
            &self.breve_u0,
            &self.v,
        )
    }

    /// `max{v <= x <= hat_u0 : f^{m+2n}(x) = d}`.
    pub fn hat_mu_prime(&self, n: u64) -> Result<Rational> {
        self.d_point(
            &Label::new(Family::Hat, Kind::MuPrime, &[n]),
            Side::Max,
            self.period + 2 * n,
            &self.v,
            &self.hat_u0,
        )
    }

    /// The base landmarks as labeled points.
    pub fn landmarks(&self) -> Vec<LabeledPoint> {
        [
            (Kind::MinP, &self.min_p, 0),
            (Kind::E, &self.e, self.period - 1),
            (Kind::V, &self.v, 1),
            (Kind::Z, &self.z, 1),
            (Kind::Y, &self.y, 2),
            (Kind::Z0, &self.z0, 2),
            (Kind::D, &self.d, 2),
            (Kind::BreveU0, &self.breve_u0, 2),
            (Kind::HatU0, &self.hat_u0, 2),
        ]
        .into_iter()
        .map(|(k, v, e)| LabeledPoint::landmark(Label::base(k), v.clone(), e))
        .collect()
    }

    /// `u_1 > ... > u_count`, with `d < f^{2i}(x) < z0` on `(d, u_n)` for `1 <= i <= n`.
    pub fn u_points(&self, count: u64) -> Result<PointReport> {
        let mut rep = PointReport::default();
        let mut chain = Chain::new("u sequence").start("d", Some(&self.d));
        let mut values = Vec::new();
        for n in 1..=count {
            let u = self.u(n)?;
            rep.points.push(LabeledPoint::landmark(
                Label::new(Family::Plain, Kind::U, &[n]),
                u.clone(),
                2 * n,
            ));
            let w = self.interval("u guard", &self.d, &u)?;
            let below = self.constant(&w, &self.z0);
            let above = self.constant(&w, &self.d);
            let mut holds = true;
            for i in 1..=n {
                let g = self.iterate_on(2 * i, &w)?;
                holds &= holds_below(&above, &g, &w, (true, true), true)
                    && holds_below(&g, &below, &w, (true, true), true);
            }
            rep.guards.push(GuardCheck {
                name: format!("d < f^(2i)(x) < z0 on (d, u_{n}) for 1 <= i <= {n}"),
                window: w,
                holds,
            });
            values.push(u);
        }
        for (n, u) in values.iter().enumerate().rev() {
            chain = chain.lt(format!("u_{}", n + 1), Some(u));
        }
        rep.chains.push(chain.lt("v", Some(&self.v)).check());
        Ok(rep)
    }

    /// `ū'_1 < ... < ū'_count`, with the decreasing even-iterate chain on `[ū'_n, z0)`.
    pub fn bar_u_points(&self, count: u64) -> Result<PointReport> {
        let mut rep = PointReport::default();
        let mut chain = Chain::new("bar u' sequence").start("v", Some(&self.v));
        for n in 1..=count {
            let u = self.bar_u_prime(n)?;
            rep.points.push(LabeledPoint::landmark(
                Label::new(Family::Bar, Kind::UPrime, &[n]),
                u.clone(),
                2 * n,
            ));
            chain = chain.lt(format!("ū'_{n}"), Some(&u));
            let w = self.interval("bar u guard", &u, &self.z0)?;
            let open = (false, true);
            let mut holds = true;
            let mut prev = self.iterate_on(0, &w)?;
            for i in 1..=n {
                let cur = self.iterate_on(2 * i, &w)?;
                holds &= holds_below(&cur, &prev, &w, open, true);
                if i == n {
                    holds &= holds_below(&self.constant(&w, &self.d), &cur, &w, open, false)
                        && holds_below(&self.constant(&w, &self.v), &prev, &w, open, true);
                }
                prev = cur;
            }
            rep.guards.push(GuardCheck {
                name: format!(
                    "v < f^(2n-2)(x) < ... < x and d <= f^(2n)(x) < f^(2n-2)(x) on [ū'_{n}, z0)"
                ),
                window: w,
                holds,
            });
        }
        rep.chains.push(chain.lt("z0", Some(&self.z0)).check());
        Ok(rep)
    }

    /// The five first-layer families for `1 <= n <= count` (and `n = 0` for the tilde
    /// family) with the full first-layer chain.
    pub fn layer1(&self, count: u64) -> Result<PointReport> {
        let m = self.period;
        let f = self.map();
        let mut rep = PointReport::default();
        let lbl = |fam, kind, n| Label::new(fam, kind, &[n]);

        let mut tilde_mu = Vec::new();
        let mut tilde_q = Vec::new();
        for n in 0..=count {
            let mu = self.tilde_mu_prime(n)?;
            rep.points.push(LabeledPoint::landmark(
                lbl(Family::Tilde, Kind::MuPrime, n),
                mu.clone(),
                m + 2 * n,
            ));
            tilde_mu.push(mu);
            let found = self.periodic(
                lbl(Family::Tilde, Kind::Q, n),
                Side::Max,
                m + 2 * n,
                &self.min_p,
                &self.d,
                Claim::guaranteed(m + 2 * n),
            )?;
            tilde_q.push(rep.take(found));
        }

        let mut us = vec![None];
        let mut cs = vec![None];
        let mut ps = vec![None];
        for n in 1..=count {
            let u = self.u(n)?;
            rep.points.push(LabeledPoint::landmark(
                lbl(Family::Plain, Kind::U, n),
                u.clone(),
                2 * n,
            ));
            us.push(Some(u));
            let found = self.periodic(
                lbl(Family::Plain, Kind::C, n),
                Side::Min,
                2 * n,
                &self.d,
                &self.v,
                Claim::guaranteed(2 * n),
            )?;
            cs.push(rep.take(found));
        }
        let u1 = self.u(1)?;
        for n in 1..=count {
            let found = self.periodic(
                lbl(Family::Plain, Kind::P, n),
                Side::Min,
                m + 2 * n,
                &u1,
                &self.v,
                Claim::guaranteed(m + 2 * n),
            )?;
            ps.push(rep.take(found));
        }

        let mut breve_mu = vec![None];
        let mut breve_p = vec![None];
        let mut hat_mu = vec![None];
        let mut hat_q = vec![None];
        for n in 1..=count {
            let mu = self.breve_mu(n)?;
            rep.points.push(LabeledPoint::landmark(
                lbl(Family::Breve, Kind::Mu, n),
                mu.clone(),
                m + 2 * n,
            ));
            breve_mu.push(Some(mu));
            let found = self.periodic(
                lbl(Family::Breve, Kind::P, n),
                Side::Min,
                m + 2 * n,
                &self.breve_u0,
                &self.v,
                Claim::guaranteed(m + 2 * n),
            )?;
            breve_p.push(rep.take(found));

            let mu = self.hat_mu_prime(n)?;
            rep.points.push(LabeledPoint::landmark(
                lbl(Family::Hat, Kind::MuPrime, n),
                mu.clone(),
                m + 2 * n,
            ));
            hat_mu.push(Some(mu));
            let found = self.periodic(
                lbl(Family::Hat, Kind::Q, n),
                Side::Max,
                m + 2 * n,
                &self.v,
                &self.hat_u0,
                Claim::guaranteed(m + 2 * n),
            )?;
            hat_q.push(rep.take(found));
        }

        let mut bar_u = vec![None];
        let mut bar_c = vec![None];
        for n in 1..=count + 1 {
            let u = self.bar_u_prime(n)?;
            rep.points.push(LabeledPoint::landmark(
                lbl(Family::Bar, Kind::UPrime, n),
                u.clone(),
                2 * n,
            ));
            bar_u.push(Some(u));
        }
        for n in 1..=count {
            let lo = bar_u[n as usize].clone().expect("computed above");
            let found = self.periodic(
                lbl(Family::Bar, Kind::C, n),
                Side::Min,
                2 * n + 2,
                &lo,
                &self.z0,
                Claim::guaranteed(2 * n + 2),
            )?;
            bar_c.push(rep.take(found));
        }

        let n_max = count as usize;
        let mut chain = Chain::new("first layer")
            .start("min P", Some(&self.min_p))
            .le(lbl(Family::Tilde, Kind::Q, 0), tilde_q[0].as_ref())
            .lt(lbl(Family::Tilde, Kind::MuPrime, 0), Some(&tilde_mu[0]));
        for n in 1..=n_max {
            chain = chain
                .lt(lbl(Family::Tilde, Kind::Q, n as u64), tilde_q[n].as_ref())
                .lt(
                    lbl(Family::Tilde, Kind::MuPrime, n as u64),
                    Some(&tilde_mu[n]),
                );
        }
        chain = chain.lt("d", Some(&self.d));
        for n in (1..=n_max).rev() {
            chain = chain
                .lt(lbl(Family::Plain, Kind::C, n as u64), cs[n].as_ref())
                .lt(lbl(Family::Plain, Kind::U, n as u64), us[n].as_ref());
        }
        chain = chain.le("breve_u0", Some(&self.breve_u0));
        for n in (1..=n_max).rev() {
            chain = chain
                .lt(lbl(Family::Breve, Kind::P, n as u64), breve_p[n].as_ref())
                .lt(lbl(Family::Breve, Kind::Mu, n as u64), breve_mu[n].as_ref());
        }
        chain = chain.lt("v", Some(&self.v));
        for n in 1..=n_max {
            chain = chain
                .lt(
                    lbl(Family::Hat, Kind::MuPrime, n as u64),
                    hat_mu[n].as_ref(),
                )
                .lt(lbl(Family::Hat, Kind::Q, n as u64), hat_q[n].as_ref());
        }
        chain = chain
            .lt("hat_u0", Some(&self.hat_u0))
            .le(lbl(Family::Bar, Kind::UPrime, 1), bar_u[1].as_ref());
        for n in 1..=n_max {
            chain = chain
                .lt(lbl(Family::Bar, Kind::C, n as u64), bar_c[n].as_ref())
                .lt(
                    lbl(Family::Bar, Kind::UPrime, n as u64 + 1),
                    bar_u[n + 1].as_ref(),
                );
        }
        rep.chains.push(chain.lt("z0", Some(&self.z0)).check());

        let mut chain =
            Chain::new("first layer p").start(lbl(Family::Plain, Kind::U, 1), Some(&u1));
        for n in (1..=n_max).rev() {
            chain = chain.lt(lbl(Family::Plain, Kind::P, n as u64), ps[n].as_ref());
        }
        rep.chains.push(chain.lt("v", Some(&self.v)).check());

        debug_assert!(rep.points.iter().all(|p| f.domain().contains(&p.value)));
        Ok(rep)
    }

    /// `max{min P <= x <= d : f^{2m+2i}(x) = x}` for `0 <= i <= count`.
    pub fn remark3_points(&self, count: u64) -> Result<PointReport> {
        let m = self.period;
        let mut rep = PointReport::default();
        let mut values = Vec::new();
        for i in 0..=count {
            let k = 2 * m + 2 * i;
            let claim = if i == 0 {
                Claim::with_fallbacks(k, &[m])
            } else {
                Claim::guaranteed(k)
            };
            let found = self.periodic(
                Label::new(Family::Tilde, Kind::CStar, &[i]),
                Side::Max,
                k,
                &self.min_p,
                &self.d,
                claim,
            )?;
            values.push(rep.take(found));
        }
        let mut chain = Chain::new("starred points").start("min P", Some(&self.min_p));
        for (i, v) in values.iter().enumerate().skip(1) {
            chain = chain.lt(
                Label::new(Family::Tilde, Kind::CStar, &[i as u64]),
                v.as_ref(),
            );
        }
        rep.chains.push(chain.lt("d", Some(&self.d)).check());
        Ok(rep)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDump {
    pub period: u64,
    pub orbit: Orbit,
    pub points: Vec<LabeledPoint>,
    pub guards: Vec<GuardCheck>,
}

impl From<&ConstructionContext> for ContextDump {
    fn from(ctx: &ConstructionContext) -> Self {
        ContextDump {
            period: ctx.period,
            orbit: ctx.orbit.clone(),
            points: ctx.landmarks(),
            guards: ctx.guards.clone(),
        }
    }
}

impl ConstructionContext {
    pub fn dump(&self) -> ContextDump {
        ContextDump::from(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{example_g, tent};
    use crate::rational::{int, ratio};

    fn g_ctx() -> ConstructionContext {
        base_context(&example_g(), &[int(0), ratio(1, 2), int(1)]).unwrap()
    }

    fn tent_ctx() -> ConstructionContext {
        base_context(&tent(), &[ratio(2, 7), ratio(4, 7), ratio(6, 7)]).unwrap()
    }

    #[test]
    fn g_landmarks() {
        let c = g_ctx();
        assert_eq!(c.e, int(1));
        assert_eq!(c.v, ratio(1, 2));
        assert_eq!(c.z, ratio(2, 3));
        assert_eq!(c.z0, ratio(2, 3));
        assert_eq!(c.d, ratio(1, 6));
        assert_eq!(c.y, ratio(1, 3));
        assert_eq!(c.breve_u0, ratio(5, 12));
        assert_eq!(c.hat_u0, ratio(13, 24));
        assert!(c.guards.iter().all(|g| g.holds), "{:?}", c.guards);
    }

    #[test]
    fn tent_landmarks() {
        let c = tent_ctx();
        assert_eq!(c.e, ratio(6, 7));
        assert_eq!(c.v, ratio(3, 7));
        assert_eq!(c.z, ratio(2, 3));
        assert_eq!(c.z0, ratio(2, 3));
        assert_eq!(c.d, ratio(1, 3));
        assert_eq!(c.breve_u0, ratio(5, 12));
        assert!(c.guards.iter().all(|g| g.holds));
    }

    #[test]
    fn refuses_even_periods() {
        let r = base_context(&tent(), &[ratio(2, 5), ratio(4, 5)]);
        assert!(matches!(r, Err(Error::UnsupportedPeriod(2))));
        assert!(base_context(&tent(), &[ratio(2, 5), ratio(1, 2)]).is_err());
    }

    #[test]
    fn u_sequences() {
        let c = g_ctx();
        let r = c.u_points(2).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_eq!(r.points[0].value, ratio(5, 12));
        assert_eq!(r.points[1].value, ratio(11, 48));
        let b = c.bar_u_points(2).unwrap();
        assert!(b.pass(), "{b:?}");
        assert_eq!(b.points[0].value, ratio(13, 24));
        assert_eq!(tent_ctx().u(1).unwrap(), ratio(5, 12));
        assert_eq!(tent_ctx().bar_u_prime(1).unwrap(), ratio(7, 12));
    }

    #[test]
    fn g_first_layer() {
        let c = g_ctx();
        let r = c.layer1(3).unwrap();
        assert!(r.pass(), "{:#?}", r);
        let get = |fam, kind, n| r.get(&Label::new(fam, kind, &[n])).cloned();
        assert_eq!(get(Family::Plain, Kind::C, 1), Some(ratio(1, 3)));
        assert_eq!(get(Family::Plain, Kind::C, 2), Some(ratio(2, 9)));
        assert_eq!(get(Family::Bar, Kind::C, 1), Some(ratio(5, 9)));
    }

    #[test]
    fn tent_first_layer() {
        let r = tent_ctx().layer1(2).unwrap();
        assert!(r.pass(), "{:#?}", r);
        assert_eq!(
            r.get(&Label::new(Family::Plain, Kind::C, &[1])),
            Some(&ratio(2, 5))
        );
    }

    #[test]
    fn g_starred() {
        let r = g_ctx().remark3_points(1).unwrap();
        assert!(r.pass(), "{r:#?}");
        assert_eq!(r.points[0].value, int(0));
        assert_eq!(r.points[0].least_period, Some(3));
        assert_eq!(r.points[1].least_period, Some(8));
    }

    #[test]
    fn labels_round_trip() {
        for s in [
            "d",
            "breve_u0",
            "tilde.q[1]",
            "plain.c'[1,2]",
            "bar.u'[1,2,3]",
            "tilde.c'*[0]",
        ] {
            assert_eq!(s.parse::<Label>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn piecewise_guard_is_exact() {
        let w = Interval::unit();
        let id = PwlMap::identity(&w);
        let half = PwlMap::constant(&w, ratio(1, 2));
        assert!(!holds_below(&half, &id, &w, (false, false), true));
        let w2 = Interval::new(ratio(1, 2), int(1)).unwrap();
        assert!(holds_below(
            &half.restrict(&w2).unwrap(),
            &id.restrict(&w2).unwrap(),
            &w2,
            (true, false),
            true
        ));
        assert!(!holds_below(
            &half.restrict(&w2).unwrap(),
            &id.restrict(&w2).unwrap(),
            &w2,
            (false, false),
            true
        ));
        assert!(holds_below(
            &half.restrict(&w2).unwrap(),
            &id.restrict(&w2).unwrap(),
            &w2,
            (false, false),
            false
        ));
    }
}
