//! Second and third tower layers, auxiliary points and nonexistence checks.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{
    to_exp, Chain, Claim, ConstructionContext, ContextDump, Family, Found, Kind, Label,
    LabeledPoint, PointReport,
};
use crate::error::{Error, Result};
use crate::periodic::least_period;
use crate::rational::{format_rational, Interval, Rational, Side};

/// Layer-2 and layer-3 scaffolding roots of `f^k(x) = d`.
impl ConstructionContext {
    /// `min{μ̃'_n <= x <= μ̃'_{n+1} : f^{m+2n+2k}(x) = d}`.
    pub fn tilde_mu(&self, n: u64, k: u64) -> Result<Rational> {
        let (a, b) = (self.tilde_mu_prime(n)?, self.tilde_mu_prime(n + 1)?);
        self.d_point(
            &Label::new(Family::Tilde, Kind::Mu, &[n, k]),
            Side::Min,
            self.period + 2 * n + 2 * k,
            &a,
            &b,
        )
    }

    /// `max{u_{n+1} <= x <= u_n : f^{2n+2k}(x) = d}`.
    pub fn plain_u_prime(&self, n: u64, k: u64) -> Result<Rational> {
        let (a, b) = (self.u(n + 1)?, self.u(n)?);
        self.d_point(
            &Label::new(Family::Plain, Kind::UPrime, &[n, k]),
            Side::Max,
            2 * n + 2 * k,
            &a,
            &b,
        )
    }

    /// `max{μ̆_{n+1} <= x <= μ̆_n : f^{m+2n+2k}(x) = d}`.
    pub fn breve_mu_prime(&self, n: u64, k: u64) -> Result<Rational> {
        let (a, b) = (self.breve_mu(n + 1)?, self.breve_mu(n)?);
        self.d_point(
            &Label::new(Family::Breve, Kind::MuPrime, &[n, k]),
            Side::Max,
            self.period + 2 * n + 2 * k,
            &a,
            &b,
        )
    }

    /// `min{μ̂'_n <= x <= μ̂'_{n+1} : f^{m+2n+2k}(x) = d}`.
    pub fn hat_mu(&self, n: u64, k: u64) -> Result<Rational> {
        let (a, b) = (self.hat_mu_prime(n)?, self.hat_mu_prime(n + 1)?);
        self.d_point(
            &Label::new(Family::Hat, Kind::Mu, &[n, k]),
            Side::Min,
            self.period + 2 * n + 2 * k,
            &a,
            &b,
        )
    }

    /// `min{ū'_n <= x <= ū'_{n+1} : f^{2n+2k}(x) = d}`.
    pub fn bar_u(&self, n: u64, k: u64) -> Result<Rational> {
        let (a, b) = (self.bar_u_prime(n)?, self.bar_u_prime(n + 1)?);
        self.d_point(
            &Label::new(Family::Bar, Kind::U, &[n, k]),
            Side::Min,
            2 * n + 2 * k,
            &a,
            &b,
        )
    }
}

/// The auxiliary point of a compartment and which candidate root was taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuChoice {
    pub point: LabeledPoint,
    /// Position of the chosen root in preference order (0 = the extremal root).
    pub root_index: usize,
    pub candidates: usize,
}

struct NuRule {
    exponent: u64,
    search: (Rational, Rational),
    sandwich: (Rational, Rational),
    prefer: Side,
}

fn nu_rule(ctx: &ConstructionContext, family: Family, indices: &[u64]) -> Result<NuRule> {
    let m = ctx.period;
    let rule = |exponent, search, sandwich, prefer| NuRule {
        exponent,
        search,
        sandwich,
        prefer,
    };
    match (family, indices) {
        (Family::Tilde, &[n]) => {
            let a = ctx.tilde_mu_prime(n)?;
            Ok(rule(
                m + 2 * n,
                (a.clone(), ctx.d.clone()),
                (a, ctx.tilde_mu_prime(n + 1)?),
                Side::Min,
            ))
        }
        (Family::Plain, &[n]) => Ok(rule(
            2 * n,
            (ctx.d.clone(), ctx.u(n)?),
            (ctx.u(n + 1)?, ctx.u(n)?),
            Side::Max,
        )),
        (Family::Breve, &[n]) => {
            let b = ctx.breve_mu(n)?;
            Ok(rule(
                m + 2 * n,
                (ctx.breve_u0.clone(), b.clone()),
                (ctx.breve_mu(n + 1)?, b),
                Side::Max,
            ))
        }
        (Family::Hat, &[n]) => {
            let a = ctx.hat_mu_prime(n)?;
            Ok(rule(
                m + 2 * n,
                (a.clone(), ctx.hat_u0.clone()),
                (a, ctx.hat_mu_prime(n + 1)?),
                Side::Min,
            ))
        }
        (Family::Bar, &[n]) => {
            let a = ctx.bar_u_prime(n)?;
            Ok(rule(
                2 * n,
                (a.clone(), ctx.z0.clone()),
                (a, ctx.bar_u_prime(n + 1)?),
                Side::Min,
            ))
        }
        (Family::Tilde, &[n, k]) => {
            let b = ctx.tilde_mu(n, k)?;
            Ok(rule(
                m + 2 * n + 2 * k,
                (ctx.tilde_mu_prime(n)?, b.clone()),
                (ctx.tilde_mu(n, k + 1)?, b),
                Side::Max,
            ))
        }
        (Family::Plain, &[n, k]) => {
            let a = ctx.plain_u_prime(n, k)?;
            Ok(rule(
                2 * n + 2 * k,
                (a.clone(), ctx.u(n)?),
                (a, ctx.plain_u_prime(n, k + 1)?),
                Side::Min,
            ))
        }
        (Family::Breve, &[n, k]) => {
            let a = ctx.breve_mu_prime(n, k)?;
            Ok(rule(
                m + 2 * n + 2 * k,
                (a.clone(), ctx.breve_mu(n)?),
                (a, ctx.breve_mu_prime(n, k + 1)?),
                Side::Min,
            ))
        }
        (Family::Hat, &[n, k]) => {
            let b = ctx.hat_mu(n, k)?;
            Ok(rule(
                m + 2 * n + 2 * k,
                (ctx.hat_mu_prime(n)?, b.clone()),
                (ctx.hat_mu(n, k + 1)?, b),
                Side::Max,
            ))
        }
        (Family::Bar, &[n, k]) => {
            let b = ctx.bar_u(n, k)?;
            Ok(rule(
                2 * n + 2 * k,
                (ctx.bar_u_prime(n)?, b.clone()),
                (ctx.bar_u(n, k + 1)?, b),
                Side::Max,
            ))
        }
        _ => Err(Error::InvalidParameter(format!(
            "no auxiliary point for {family} with indices {indices:?}"
        ))),
    }
}

/// The root of `f^e(x) = v` that anchors a compartment: the extremal root on the
/// side of the compartment's shared endpoint, or the next one in that order
/// that lies strictly inside the compartment.
pub fn aux_nu(ctx: &ConstructionContext, family: Family, indices: &[u64]) -> Result<NuChoice> {
    let rule = nu_rule(ctx, family, indices)?;
    let label = Label::new(family, Kind::Nu, indices);
    let window = ctx.interval(&label.to_string(), &rule.search.0, &rule.search.1)?;
    let roots = ctx
        .solver()
        .eq_const(to_exp(rule.exponent)?, &ctx.v, &window)?;
    let mut candidates: Vec<Rational> = Vec::new();
    for c in roots.components() {
        candidates.push(c.lo.clone());
        if !c.is_point() {
            candidates.push(c.hi.clone());
        }
    }
    if rule.prefer == Side::Max {
        candidates.reverse();
    }
    let (lo, hi) = &rule.sandwich;
    let found = candidates.iter().position(|x| lo < x && x < hi);
    match found {
        Some(i) => Ok(NuChoice {
            point: LabeledPoint::landmark(label, candidates[i].clone(), rule.exponent),
            root_index: i,
            candidates: candidates.len(),
        }),
        None => Err(Error::Invariant(format!(
            "{label}: no root of f^{}(x) = v in {} lies strictly between {} and {}",
            rule.exponent,
            window,
            format_rational(lo),
            format_rational(hi)
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullReport {
    pub hulls: Vec<(String, Option<Interval>)>,
    pub disjoint: bool,
}

fn hull_of(values: &[Option<Rational>]) -> Option<Interval> {
    let present: Vec<&Rational> = values.iter().flatten().collect();
    let lo = present.iter().min()?;
    let hi = present.iter().max()?;
    Some(Interval {
        lo: (*lo).clone(),
        hi: (*hi).clone(),
    })
}

fn hull_report(sets: Vec<(&str, &[Option<Rational>])>) -> HullReport {
    let hulls: Vec<(String, Option<Interval>)> = sets
        .into_iter()
        .map(|(n, v)| (n.to_string(), hull_of(v)))
        .collect();
    let mut disjoint = true;
    for i in 0..hulls.len() {
        for j in i + 1..hulls.len() {
            if let (Some(a), Some(b)) = (&hulls[i].1, &hulls[j].1) {
                disjoint &= a.hi < b.lo || b.hi < a.lo;
            }
        }
    }
    HullReport { hulls, disjoint }
}

/// One compartment of the second (`indices = [n]`) or third (`[n, k]`) layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compartment {
    pub family: Family,
    pub layer: u8,
    pub indices: Vec<u64>,
    pub window: Interval,
    pub nu: NuChoice,
    pub report: PointReport,
    pub hulls: HullReport,
    pub notes: Vec<String>,
}

impl Compartment {
    pub fn pass(&self) -> bool {
        self.report.pass() && self.hulls.disjoint
    }
}

/// Collects points of one compartment.
struct Cell<'a> {
    ctx: &'a ConstructionContext,
    family: Family,
    prefix: Vec<u64>,
    report: PointReport,
}

impl<'a> Cell<'a> {
    fn new(ctx: &'a ConstructionContext, family: Family, prefix: &[u64]) -> Self {
        Cell {
            ctx,
            family,
            prefix: prefix.to_vec(),
            report: PointReport::default(),
        }
    }

    fn label(&self, kind: Kind, j: u64) -> Label {
        let mut idx = self.prefix.clone();
        idx.push(j);
        Label::new(self.family, kind, &idx)
    }

    fn d_point(
        &mut self,
        kind: Kind,
        j: u64,
        side: Side,
        e: u64,
        lo: &Rational,
        hi: &Rational,
    ) -> Result<Rational> {
        let label = self.label(kind, j);
        let x = self.ctx.d_point(&label, side, e, lo, hi)?;
        self.report
            .points
            .push(LabeledPoint::landmark(label, x.clone(), e));
        Ok(x)
    }

    fn periodic(
        &mut self,
        kind: Kind,
        j: u64,
        side: Side,
        e: u64,
        (lo, hi): (&Rational, &Rational),
        claim: Claim,
    ) -> Result<Option<Rational>> {
        let found: Found = self
            .ctx
            .periodic(self.label(kind, j), side, e, lo, hi, claim)?;
        Ok(self.report.take(found))
    }

    fn finish(
        self,
        layer: u8,
        window: Interval,
        nu: NuChoice,
        chains: Vec<Chain>,
        hulls: HullReport,
        notes: Vec<String>,
    ) -> Compartment {
        let mut report = self.report;
        report.points.push(nu.point.clone());
        report.chains.extend(chains.into_iter().map(Chain::check));
        Compartment {
            family: self.family,
            layer,
            indices: self.prefix,
            window,
            nu,
            report,
            hulls,
            notes,
        }
    }
}

fn at(v: &[Option<Rational>], j: u64) -> Option<&Rational> {
    v.get(j as usize - 1).and_then(Option::as_ref)
}

fn some(v: &[Rational], j: u64) -> Option<&Rational> {
    v.get(j as usize - 1)
}

/// A second-layer compartment with `k = 1..=count`.
pub fn layer2_compartment(
    ctx: &ConstructionContext,
    family: Family,
    n: u64,
    count: u64,
) -> Result<Compartment> {
    let min_n = if family == Family::Tilde { 0 } else { 1 };
    if n < min_n || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "{family} second-layer compartments need n >= {min_n} and count >= 1"
        )));
    }
    let m = ctx.period;
    let nu = aux_nu(ctx, family, &[n])?;
    let nv = nu.point.value.clone();
    let mut cell = Cell::new(ctx, family, &[n]);
    let ks = 1..=count;
    let odd = |k: u64| m + 2 * n + 2 * k;
    let even_m = |k: u64| 2 * m + 2 * n + 2 * k;
    let lbl = |kind, k| Label::new(family, kind, &[n, k]);
    let nu_label = Label::new(family, Kind::Nu, &[n]);
    let mut notes = Vec::new();

    let (a, b, chains, hulls) = match family {
        Family::Tilde => {
            let (a, b) = (ctx.tilde_mu_prime(n)?, ctx.tilde_mu_prime(n + 1)?);
            let mut mu = Vec::new();
            for k in ks.clone() {
                mu.push(cell.d_point(Kind::Mu, k, Side::Min, odd(k), &a, &b)?);
            }
            let (mut p, mut c, mut cp) = (Vec::new(), Vec::new(), Vec::new());
            for k in ks.clone() {
                p.push(cell.periodic(
                    Kind::P,
                    k,
                    Side::Min,
                    odd(k),
                    (&a, &b),
                    Claim::guaranteed(odd(k)),
                )?);
                let claim = Claim::gated(even_m(k), k >= n + 3);
                c.push(cell.periodic(
                    Kind::C,
                    k,
                    Side::Min,
                    even_m(k),
                    (&mu[0], &b),
                    claim.clone(),
                )?);
                cp.push(cell.periodic(Kind::CPrime, k, Side::Max, even_m(k), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::Mu, k), some(&mu, k));
                if k >= 2 {
                    ch = ch.lt(lbl(Kind::P, k), at(&p, k));
                }
            }
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, k), at(&c, k));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for k in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, k), at(&cp, k));
            }
            let ch = ch.lt("b", Some(&b));
            let first = Chain::new("first periodic point")
                .start(lbl(Kind::Mu, 1), some(&mu, 1))
                .lt(lbl(Kind::P, 1), at(&p, 1))
                .lt(&nu_label, Some(&nv));
            let hulls = hull_report(vec![("p (k >= 2)", &p[1..]), ("c", &c), ("c'", &cp)]);
            (a, b, vec![ch, first], hulls)
        }
        Family::Plain => {
            let (a, b) = (ctx.u(n + 1)?, ctx.u(n)?);
            let mut up = Vec::new();
            for k in ks.clone() {
                up.push(cell.d_point(Kind::UPrime, k, Side::Max, 2 * n + 2 * k, &a, &b)?);
            }
            let (mut cp, mut q, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for k in ks.clone() {
                let e = 2 * n + 2 * k;
                let claim = if k == n {
                    Claim::with_fallbacks(e, &[2 * n])
                } else {
                    Claim::guaranteed(e)
                };
                cp.push(cell.periodic(Kind::CPrime, k, Side::Max, e, (&a, &b), claim)?);
                q.push(cell.periodic(
                    Kind::Q,
                    k,
                    Side::Max,
                    odd(k),
                    (&a, &up[0]),
                    Claim::guaranteed(odd(k)),
                )?);
                p.push(cell.periodic(
                    Kind::P,
                    k,
                    Side::Min,
                    odd(k),
                    (&a, &b),
                    Claim::guaranteed(odd(k)),
                )?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::P, k), at(&p, k));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for k in 1..=count {
                ch = ch.lt(lbl(Kind::Q, k), at(&q, k));
            }
            for k in 1..=count {
                ch = ch
                    .lt(lbl(Kind::UPrime, k), some(&up, k))
                    .lt(lbl(Kind::CPrime, k), at(&cp, k));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("p", &p), ("q", &q), ("c'", &cp)]);
            (a, b, vec![ch], hulls)
        }
        Family::Breve => {
            let (a, b) = (ctx.breve_mu(n + 1)?, ctx.breve_mu(n)?);
            let mut mup = Vec::new();
            for k in ks.clone() {
                mup.push(cell.d_point(Kind::MuPrime, k, Side::Max, odd(k), &a, &b)?);
            }
            let (mut q, mut cp, mut c) = (Vec::new(), Vec::new(), Vec::new());
            for k in ks.clone() {
                q.push(cell.periodic(
                    Kind::Q,
                    k,
                    Side::Max,
                    odd(k),
                    (&a, &b),
                    Claim::guaranteed(odd(k)),
                )?);
                let claim = Claim::gated(even_m(k), k >= n + 3);
                cp.push(cell.periodic(
                    Kind::CPrime,
                    k,
                    Side::Max,
                    even_m(k),
                    (&a, &mup[0]),
                    claim.clone(),
                )?);
                c.push(cell.periodic(Kind::C, k, Side::Min, even_m(k), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, k), at(&c, k));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for k in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, k), at(&cp, k));
            }
            for k in 1..=count {
                ch = ch
                    .lt(lbl(Kind::MuPrime, k), some(&mup, k))
                    .lt(lbl(Kind::Q, k), at(&q, k));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("c", &c), ("c'", &cp), ("q", &q)]);
            (a, b, vec![ch], hulls)
        }
        Family::Hat => {
            let (a, b) = (ctx.hat_mu_prime(n)?, ctx.hat_mu_prime(n + 1)?);
            let mut mu = Vec::new();
            for k in ks.clone() {
                mu.push(cell.d_point(Kind::Mu, k, Side::Min, odd(k), &a, &b)?);
            }
            let (mut p, mut c, mut cp) = (Vec::new(), Vec::new(), Vec::new());
            for k in ks.clone() {
                p.push(cell.periodic(
                    Kind::P,
                    k,
                    Side::Min,
                    odd(k),
                    (&a, &b),
                    Claim::guaranteed(odd(k)),
                )?);
                let claim = Claim::gated(even_m(k), k >= m + n + 3);
                c.push(cell.periodic(
                    Kind::C,
                    k,
                    Side::Min,
                    even_m(k),
                    (&mu[0], &b),
                    claim.clone(),
                )?);
                cp.push(cell.periodic(Kind::CPrime, k, Side::Max, even_m(k), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch = ch
                    .lt(lbl(Kind::P, k), at(&p, k))
                    .lt(lbl(Kind::Mu, k), some(&mu, k));
            }
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, k), at(&c, k));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for k in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, k), at(&cp, k));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("p", &p), ("c", &c), ("c'", &cp)]);
            (a, b, vec![ch], hulls)
        }
        Family::Bar => {
            let (a, b) = (ctx.bar_u_prime(n)?, ctx.bar_u_prime(n + 1)?);
            let mut u = Vec::new();
            for k in ks.clone() {
                u.push(cell.d_point(Kind::U, k, Side::Min, 2 * n + 2 * k, &a, &b)?);
            }
            let (mut c, mut p, mut q) = (Vec::new(), Vec::new(), Vec::new());
            for k in ks.clone() {
                let e = 2 * n + 2 * k;
                c.push(cell.periodic(Kind::C, k, Side::Min, e, (&a, &b), Claim::guaranteed(e))?);
                p.push(cell.periodic(
                    Kind::P,
                    k,
                    Side::Min,
                    odd(k),
                    (&u[0], &b),
                    Claim::guaranteed(odd(k)),
                )?);
                q.push(cell.periodic(
                    Kind::Q,
                    k,
                    Side::Max,
                    odd(k),
                    (&a, &b),
                    Claim::guaranteed(odd(k)),
                )?);
            }
            let mut ch_u = Chain::new("d-points").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch_u = ch_u.lt(lbl(Kind::U, k), some(&u, k));
            }
            let ch_u = ch_u.lt(&nu_label, Some(&nv)).lt("b", Some(&b));
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, k), at(&c, k));
            }
            ch = ch.lt(lbl(Kind::U, 1), some(&u, 1));
            for k in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::P, k), at(&p, k));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for k in 1..=count {
                ch = ch.lt(lbl(Kind::Q, k), at(&q, k));
            }
            let ch = ch.lt("b", Some(&b));
            for k in ks.clone() {
                if let Some(ck) = at(&c, k) {
                    let below = u.iter().filter(|x| *x < ck).count();
                    notes.push(format!(
                        "{} lies above {below} of the {count} points u[{n},*]",
                        lbl(Kind::C, k)
                    ));
                }
            }
            let hulls = hull_report(vec![("c", &c), ("p", &p), ("q", &q)]);
            (a, b, vec![ch_u, ch], hulls)
        }
        Family::Base => return Err(Error::InvalidParameter("base is not a tower family".into())),
    };
    let window = ctx.interval("compartment", &a, &b)?;
    Ok(cell.finish(2, window, nu, chains, hulls, notes))
}

/// A third-layer compartment with `i = 1..=count`.
pub fn layer3_compartment(
    ctx: &ConstructionContext,
    family: Family,
    n: u64,
    k: u64,
    count: u64,
) -> Result<Compartment> {
    let min_n = if family == Family::Tilde { 0 } else { 1 };
    if n < min_n || k == 0 || count == 0 || family == Family::Base {
        return Err(Error::InvalidParameter(format!(
            "{family} third-layer compartments need n >= {min_n}, k >= 1 and count >= 1"
        )));
    }
    let m = ctx.period;
    let nu = aux_nu(ctx, family, &[n, k])?;
    let nv = nu.point.value.clone();
    let mut cell = Cell::new(ctx, family, &[n, k]);
    let is = 1..=count;
    let base = 2 * n + 2 * k;
    let odd = |i: u64| m + base + 2 * i;
    let even = |i: u64| base + 2 * i;
    let even_m = |i: u64| m + odd(i);
    let lbl = |kind, i| Label::new(family, kind, &[n, k, i]);
    let nu_label = Label::new(family, Kind::Nu, &[n, k]);

    let (a, b, chains, hulls) = match family {
        Family::Tilde => {
            let (a, b) = (ctx.tilde_mu(n, k + 1)?, ctx.tilde_mu(n, k)?);
            let mut mup = Vec::new();
            for i in is.clone() {
                mup.push(cell.d_point(Kind::MuPrime, i, Side::Max, odd(i), &a, &b)?);
            }
            let (mut q, mut cp, mut c) = (Vec::new(), Vec::new(), Vec::new());
            for i in is.clone() {
                q.push(cell.periodic(
                    Kind::Q,
                    i,
                    Side::Max,
                    odd(i),
                    (&a, &b),
                    Claim::guaranteed(odd(i)),
                )?);
                let claim = Claim::gated(even_m(i), i >= n + k + 3);
                cp.push(cell.periodic(
                    Kind::CPrime,
                    i,
                    Side::Max,
                    even_m(i),
                    (&a, &mup[0]),
                    claim.clone(),
                )?);
                c.push(cell.periodic(Kind::C, i, Side::Min, even_m(i), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for i in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, i), at(&c, i));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, i), at(&cp, i));
            }
            for i in 1..=count {
                if i >= 2 {
                    ch = ch.lt(lbl(Kind::Q, i), at(&q, i));
                }
                ch = ch.lt(lbl(Kind::MuPrime, i), some(&mup, i));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("c", &c), ("c'", &cp), ("q (i >= 2)", &q[1..])]);
            (a, b, vec![ch], hulls)
        }
        Family::Plain => {
            let (a, b) = (ctx.plain_u_prime(n, k)?, ctx.plain_u_prime(n, k + 1)?);
            let mut u = Vec::new();
            for i in is.clone() {
                u.push(cell.d_point(Kind::U, i, Side::Min, even(i), &a, &b)?);
            }
            let special = (1..=n)
                .find(|j| (k + j).is_multiple_of(n))
                .expect("some residue vanishes");
            let (mut c, mut p, mut q) = (Vec::new(), Vec::new(), Vec::new());
            for i in is.clone() {
                let claim = if i == special {
                    Claim::with_fallbacks(even(i), &[2 * n])
                } else if i == n + k {
                    Claim::with_fallbacks(even(i), &[2 * n + 2 * k])
                } else {
                    Claim::guaranteed(even(i))
                };
                c.push(cell.periodic(Kind::C, i, Side::Min, even(i), (&a, &b), claim)?);
                p.push(cell.periodic(
                    Kind::P,
                    i,
                    Side::Min,
                    odd(i),
                    (&u[0], &b),
                    Claim::guaranteed(odd(i)),
                )?);
                q.push(cell.periodic(
                    Kind::Q,
                    i,
                    Side::Max,
                    odd(i),
                    (&a, &b),
                    Claim::guaranteed(odd(i)),
                )?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for i in (1..=count).rev() {
                ch = ch
                    .lt(lbl(Kind::C, i), at(&c, i))
                    .lt(lbl(Kind::U, i), some(&u, i));
            }
            for i in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::P, i), at(&p, i));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch = ch.lt(lbl(Kind::Q, i), at(&q, i));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("c", &c), ("p", &p), ("q", &q)]);
            (a, b, vec![ch], hulls)
        }
        Family::Breve => {
            let (a, b) = (ctx.breve_mu_prime(n, k)?, ctx.breve_mu_prime(n, k + 1)?);
            let mut mu = Vec::new();
            for i in is.clone() {
                mu.push(cell.d_point(Kind::Mu, i, Side::Min, odd(i), &a, &b)?);
            }
            let (mut p, mut c, mut cp) = (Vec::new(), Vec::new(), Vec::new());
            for i in is.clone() {
                p.push(cell.periodic(
                    Kind::P,
                    i,
                    Side::Min,
                    odd(i),
                    (&a, &b),
                    Claim::guaranteed(odd(i)),
                )?);
                let claim = Claim::gated(even_m(i), i >= n + k + 3);
                c.push(cell.periodic(
                    Kind::C,
                    i,
                    Side::Min,
                    even_m(i),
                    (&mu[0], &b),
                    claim.clone(),
                )?);
                cp.push(cell.periodic(Kind::CPrime, i, Side::Max, even_m(i), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for i in (1..=count).rev() {
                ch = ch
                    .lt(lbl(Kind::P, i), at(&p, i))
                    .lt(lbl(Kind::Mu, i), some(&mu, i));
            }
            for i in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, i), at(&c, i));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, i), at(&cp, i));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("p", &p), ("c", &c), ("c'", &cp)]);
            (a, b, vec![ch], hulls)
        }
        Family::Hat => {
            let (a, b) = (ctx.hat_mu(n, k + 1)?, ctx.hat_mu(n, k)?);
            let mut mup = Vec::new();
            for i in is.clone() {
                mup.push(cell.d_point(Kind::MuPrime, i, Side::Max, odd(i), &a, &b)?);
            }
            let (mut q, mut cp, mut c) = (Vec::new(), Vec::new(), Vec::new());
            for i in is.clone() {
                q.push(cell.periodic(
                    Kind::Q,
                    i,
                    Side::Max,
                    odd(i),
                    (&a, &b),
                    Claim::guaranteed(odd(i)),
                )?);
                let claim = Claim::gated(even_m(i), i >= n + k + 3);
                cp.push(cell.periodic(
                    Kind::CPrime,
                    i,
                    Side::Max,
                    even_m(i),
                    (&a, &mup[0]),
                    claim.clone(),
                )?);
                c.push(cell.periodic(Kind::C, i, Side::Min, even_m(i), (&a, &b), claim)?);
            }
            let mut ch = Chain::new("compartment").start("a", Some(&a));
            for i in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::C, i), at(&c, i));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch = ch.lt(lbl(Kind::CPrime, i), at(&cp, i));
            }
            for i in 1..=count {
                ch = ch
                    .lt(lbl(Kind::MuPrime, i), some(&mup, i))
                    .lt(lbl(Kind::Q, i), at(&q, i));
            }
            let ch = ch.lt("b", Some(&b));
            let hulls = hull_report(vec![("c", &c), ("c'", &cp), ("q", &q)]);
            (a, b, vec![ch], hulls)
        }
        Family::Bar => {
            let (a, b) = (ctx.bar_u(n, k + 1)?, ctx.bar_u(n, k)?);
            let mut up = Vec::new();
            for i in is.clone() {
                up.push(cell.d_point(Kind::UPrime, i, Side::Max, even(i), &a, &b)?);
            }
            let (mut cp, mut q, mut p) = (Vec::new(), Vec::new(), Vec::new());
            for i in is.clone() {
                let claim = Claim::gated(even(i), i >= n + k + 2);
                cp.push(cell.periodic(Kind::CPrime, i, Side::Max, even(i), (&a, &b), claim)?);
                q.push(cell.periodic(
                    Kind::Q,
                    i,
                    Side::Max,
                    odd(i),
                    (&a, &up[0]),
                    Claim::guaranteed(odd(i)),
                )?);
                p.push(cell.periodic(
                    Kind::P,
                    i,
                    Side::Min,
                    odd(i),
                    (&a, &b),
                    Claim::guaranteed(odd(i)),
                )?);
            }
            let mut ch_u = Chain::new("d-points")
                .start("a", Some(&a))
                .lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch_u = ch_u.lt(lbl(Kind::UPrime, i), some(&up, i));
            }
            let ch_u = ch_u.lt("b", Some(&b));
            let mut ch_c = Chain::new("even points").start(lbl(Kind::UPrime, 1), some(&up, 1));
            for i in 1..=count {
                ch_c = ch_c.lt(lbl(Kind::CPrime, i), at(&cp, i));
            }
            let ch_c = ch_c.lt("b", Some(&b));
            let mut ch = Chain::new("odd points").start("a", Some(&a));
            for i in (1..=count).rev() {
                ch = ch.lt(lbl(Kind::P, i), at(&p, i));
            }
            ch = ch.lt(&nu_label, Some(&nv));
            for i in 1..=count {
                ch = ch.lt(lbl(Kind::Q, i), at(&q, i));
            }
            let ch = ch.lt(lbl(Kind::UPrime, 1), some(&up, 1));
            let hulls = hull_report(vec![("c'", &cp), ("p", &p), ("q", &q)]);
            (a, b, vec![ch_u, ch_c, ch], hulls)
        }
        Family::Base => unreachable!("rejected above"),
    };
    let window = ctx.interval("compartment", &a, &b)?;
    Ok(cell.finish(3, window, nu, chains, hulls, Vec::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapCheck {
    /// `[d, u_n]`.
    Base { n: u64 },
    /// `[u'_{n,i}, u_n]`.
    Second { n: u64, i: u64 },
    /// `[u'_{n,k}, u_{n,k,i}]`.
    Third { n: u64, k: u64, i: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub check: GapCheck,
    pub interval: Interval,
    pub bound: u64,
    pub allowed: Vec<u64>,
    /// Least periods `<= bound` of periodic points in the interval.
    pub found: Vec<u64>,
    pub violations: Vec<u64>,
    pub pass: bool,
}

/// Enumerates every periodic point of least period `<= bound` in the checked
/// interval and checks that only the allowed periods occur.
pub fn verify_nonexistence(ctx: &ConstructionContext, gap: GapCheck) -> Result<NonexistenceReport> {
    let (lo, hi, bound, allowed) = match gap {
        GapCheck::Base { n } => (ctx.d.clone(), ctx.u(n)?, 2 * n + 1, vec![2 * n]),
        GapCheck::Second { n, i } => (
            ctx.plain_u_prime(n, i)?,
            ctx.u(n)?,
            2 * n + 2 * i + 1,
            vec![2 * n, 2 * n + 2 * i],
        ),
        GapCheck::Third { n, k, i } => {
            let lo = ctx.plain_u_prime(n, k)?;
            let hi_b = ctx.plain_u_prime(n, k + 1)?;
            let label = Label::new(Family::Plain, Kind::U, &[n, k, i]);
            let hi = ctx.d_point(&label, Side::Min, 2 * n + 2 * k + 2 * i, &lo, &hi_b)?;
            (
                lo,
                hi,
                2 * n + 2 * k + 2 * i + 1,
                vec![2 * n, 2 * n + 2 * k, 2 * n + 2 * k + 2 * i],
            )
        }
    };
    let interval = ctx.interval("gap interval", &lo, &hi)?;
    let f = ctx.map();
    let mut found = BTreeSet::new();
    for j in 1..=bound {
        let roots = ctx.solver().fixed(to_exp(j)?, &interval)?;
        let points = roots.points().ok_or(Error::InfinitePeriodicSet(j))?;
        for x in points {
            if let Some(t) = least_period(f, &x, j) {
                found.insert(t);
            }
        }
    }
    let violations: Vec<u64> = found
        .iter()
        .copied()
        .filter(|t| !allowed.contains(t))
        .collect();
    Ok(NonexistenceReport {
        check: gap,
        interval,
        bound,
        allowed,
        found: found.into_iter().collect(),
        pass: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerPlan {
    pub layer1: u64,
    pub layer2: u64,
    pub layer3: u64,
}

impl TowerPlan {
    /// Layer 2 uses `n <= layer2` and `k <= layer2`; layer 3 uses every such
    /// `(n, k)` with `i <= layer3`.
    pub fn new(layer2: u64, layer3: u64) -> TowerPlan {
        TowerPlan {
            layer1: layer2.max(1),
            layer2,
            layer3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Verified,
    Failed,
    Informational,
    Missing,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub label: Label,
    pub value: Option<String>,
    pub claimed: Option<u64>,
    pub actual: Option<u64>,
    pub guaranteed: bool,
    pub fallbacks: Vec<u64>,
    pub status: RowStatus,
    pub pass: bool,
}

pub fn verification_rows(rep: &PointReport) -> Vec<VerificationRow> {
    let mut rows = Vec::new();
    for p in &rep.points {
        let Some(claim) = &p.claim else { continue };
        let status = if !claim.is_checked() {
            RowStatus::Informational
        } else if p.verified {
            RowStatus::Verified
        } else {
            RowStatus::Failed
        };
        rows.push(VerificationRow {
            label: p.label.clone(),
            value: Some(format_rational(&p.value)),
            claimed: Some(claim.period),
            actual: p.least_period,
            guaranteed: claim.guaranteed,
            fallbacks: claim.fallbacks.clone(),
            status,
            pass: p.verified,
        });
    }
    for mp in &rep.missing {
        rows.push(VerificationRow {
            label: mp.label.clone(),
            value: None,
            claimed: Some(mp.exponent),
            actual: None,
            guaranteed: false,
            fallbacks: Vec::new(),
            status: RowStatus::Missing,
            pass: false,
        });
    }
    for l in &rep.skipped {
        rows.push(VerificationRow {
            label: l.clone(),
            value: None,
            claimed: None,
            actual: None,
            guaranteed: false,
            fallbacks: Vec::new(),
            status: RowStatus::Skipped,
            pass: true,
        });
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tower {
    pub context: ContextDump,
    pub plan: TowerPlan,
    pub layer1: PointReport,
    pub compartments: Vec<Compartment>,
    pub section_violations: Vec<String>,
    pub labels_unique: bool,
    pub verification: Vec<VerificationRow>,
    pub pass: bool,
}

impl Tower {
    /// Points grouped by family, then by compartment indices ("layer1" for the first layer).
    pub fn families(&self) -> BTreeMap<String, BTreeMap<String, Vec<LabeledPoint>>> {
        let mut out: BTreeMap<String, BTreeMap<String, Vec<LabeledPoint>>> = BTreeMap::new();
        for p in &self.layer1.points {
            out.entry(p.label.family.to_string())
                .or_default()
                .entry("layer1".into())
                .or_default()
                .push(p.clone());
        }
        for c in &self.compartments {
            let key = c
                .indices
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            out.entry(c.family.to_string())
                .or_default()
                .entry(key)
                .or_default()
                .extend(c.report.points.iter().cloned());
        }
        out
    }
}

fn section(
    ctx: &ConstructionContext,
    label: &Label,
    u1: &Rational,
    bar_u1: &Rational,
) -> Option<(Rational, Rational)> {
    let s = match label.family {
        Family::Base => return None,
        Family::Tilde => (ctx.min_p.clone(), ctx.d.clone()),
        Family::Plain if label.kind == Kind::P && label.index.len() == 1 => {
            (u1.clone(), ctx.v.clone())
        }
        Family::Plain => (ctx.d.clone(), u1.clone()),
        Family::Breve => (u1.clone(), ctx.v.clone()),
        Family::Hat => (ctx.v.clone(), bar_u1.clone()),
        Family::Bar => (bar_u1.clone(), ctx.z0.clone()),
    };
    Some(s)
}

/// Layer 1 plus every compartment named by the plan, with a flat verification table.
pub fn assemble_tower(ctx: &ConstructionContext, plan: TowerPlan) -> Result<Tower> {
    let layer1 = ctx.layer1(plan.layer1)?;
    let mut specs: Vec<(Family, Vec<u64>, u64)> = Vec::new();
    if plan.layer2 > 0 {
        for family in Family::TOWER {
            let first = if family == Family::Tilde { 0 } else { 1 };
            for n in first..=plan.layer2 {
                specs.push((family, vec![n], plan.layer2));
                if plan.layer3 > 0 {
                    for k in 1..=plan.layer2 {
                        specs.push((family, vec![n, k], plan.layer3));
                    }
                }
            }
        }
    }
    let compartments: Vec<Compartment> = specs
        .par_iter()
        .map(|(family, idx, count)| match *idx.as_slice() {
            [n] => layer2_compartment(ctx, *family, n, *count),
            [n, k] => layer3_compartment(ctx, *family, n, k, *count),
            _ => unreachable!("plans only produce one or two indices"),
        })
        .collect::<Result<Vec<_>>>()?;

    let u1 = ctx.u(1)?;
    let bar_u1 = ctx.bar_u_prime(1)?;
    let mut section_violations = Vec::new();
    let mut labels = BTreeSet::new();
    let mut labels_unique = true;
    let all = layer1
        .points
        .iter()
        .chain(compartments.iter().flat_map(|c| c.report.points.iter()));
    for p in all {
        labels_unique &= labels.insert(p.label.clone());
        if let Some((lo, hi)) = section(ctx, &p.label, &u1, &bar_u1) {
            if !(lo <= p.value && p.value <= hi) {
                section_violations.push(format!(
                    "{} = {} outside [{}, {}]",
                    p.label,
                    format_rational(&p.value),
                    format_rational(&lo),
                    format_rational(&hi)
                ));
            }
        }
    }

    let mut verification = verification_rows(&layer1);
    for c in &compartments {
        verification.extend(verification_rows(&c.report));
    }
    let pass = layer1.pass()
        && compartments.iter().all(Compartment::pass)
        && section_violations.is_empty()
        && labels_unique;
    Ok(Tower {
        context: ctx.dump(),
        plan,
        layer1,
        compartments,
        section_violations,
        labels_unique,
        verification,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::base_context;
    use crate::pwl::{example_g, tent};
    use crate::rational::{int, ratio};

    fn g_ctx() -> ConstructionContext {
        base_context(&example_g(), &[int(0), ratio(1, 2), int(1)]).unwrap()
    }

    fn tent_ctx() -> ConstructionContext {
        base_context(&tent(), &[ratio(2, 7), ratio(4, 7), ratio(6, 7)]).unwrap()
    }

    #[test]
    fn g_plain_nu() {
        let nu = aux_nu(&g_ctx(), Family::Plain, &[1]).unwrap();
        assert_eq!(nu.point.value, ratio(1, 4));
        assert_eq!(nu.root_index, 0);
    }

    #[test]
    fn g_plain_compartment() {
        let c = layer2_compartment(&g_ctx(), Family::Plain, 1, 2).unwrap();
        assert!(c.pass(), "{c:#?}");
        let get = |kind, k| {
            c.report
                .get(&Label::new(Family::Plain, kind, &[1, k]))
                .cloned()
        };
        assert_eq!(get(Kind::UPrime, 1), Some(ratio(7, 24)));
        assert_eq!(get(Kind::CPrime, 1), Some(ratio(1, 3)));
        let cp = c
            .report
            .points
            .iter()
            .find(|p| p.label == Label::new(Family::Plain, Kind::CPrime, &[1, 1]))
            .unwrap();
        assert_eq!(cp.least_period, Some(2));
        for kind in [Kind::P, Kind::Q] {
            let p = c
                .report
                .points
                .iter()
                .find(|p| p.label == Label::new(Family::Plain, kind, &[1, 1]))
                .unwrap();
            assert_eq!(p.least_period, Some(7));
        }
    }

    #[test]
    fn every_family_small() {
        for ctx in [g_ctx(), tent_ctx()] {
            for family in Family::TOWER {
                let n = if family == Family::Tilde { 0 } else { 1 };
                let c = layer2_compartment(&ctx, family, n, 2).unwrap();
                assert!(c.pass(), "{family} layer 2: {c:#?}");
                let c = layer3_compartment(&ctx, family, n, 1, 1).unwrap();
                assert!(c.pass(), "{family} layer 3: {c:#?}");
            }
        }
    }

    #[test]
    fn gap_checks() {
        let g = g_ctx();
        let r = verify_nonexistence(&g, GapCheck::Base { n: 2 }).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(
            r.interval,
            Interval::new(ratio(1, 6), ratio(11, 48)).unwrap()
        );
        let r = verify_nonexistence(&g, GapCheck::Base { n: 1 }).unwrap();
        assert!(r.found.contains(&2));
        let t = tent_ctx();
        assert!(
            verify_nonexistence(&t, GapCheck::Base { n: 1 })
                .unwrap()
                .pass
        );
        assert!(
            verify_nonexistence(&g, GapCheck::Second { n: 1, i: 1 })
                .unwrap()
                .pass
        );
        assert!(
            verify_nonexistence(&g, GapCheck::Third { n: 1, k: 1, i: 1 })
                .unwrap()
                .pass
        );
    }

    #[test]
    fn layer1_only_tower() {
        let t = assemble_tower(&g_ctx(), TowerPlan::new(0, 0)).unwrap();
        assert!(t.compartments.is_empty());
        assert!(t.pass);
    }
}
