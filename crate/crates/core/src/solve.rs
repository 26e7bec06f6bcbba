//! Exact solution sets of `f^k(x) = c` and `f^k(x) = x` over rational windows.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::pwl::{piece_cap, PwlMap};
use crate::rational::{Interval, Rational, RootSet, Side};

/// `{x in domain : f(x) in target}`.
pub fn preimage(f: &PwlMap, target: &Interval) -> RootSet {
    let mut parts = Vec::new();
    for ((x0, y0), (x1, y1)) in f.pieces() {
        if let Some(iv) = piece_preimage(x0, y0, x1, y1, target) {
            parts.push(iv);
        }
    }
    if f.piece_count() == 0 {
        let (x, y) = &f.nodes()[0];
        if target.contains(y) {
            parts.push(Interval::point(x.clone()));
        }
    }
    RootSet::canonicalize(parts)
}

fn piece_preimage(
    x0: &Rational,
    y0: &Rational,
    x1: &Rational,
    y1: &Rational,
    target: &Interval,
) -> Option<Interval> {
    if y0 == y1 {
        return target.contains(y0).then(|| Interval {
            lo: x0.clone(),
            hi: x1.clone(),
        });
    }
    let (ylo, yhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
    let lo = target.lo.clone().max(ylo.clone());
    let hi = target.hi.clone().min(yhi.clone());
    if lo > hi {
        return None;
    }
    let at = |y: &Rational| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
    let (a, b) = (at(&lo), at(&hi));
    Some(if a <= b {
        Interval { lo: a, hi: b }
    } else {
        Interval { lo: b, hi: a }
    })
}

/// Preimage of every component of `set`.
pub fn preimage_set(f: &PwlMap, set: &RootSet) -> RootSet {
    let mut parts = Vec::new();
    for comp in set.components() {
        parts.extend(preimage(f, comp).components().iter().cloned());
    }
    RootSet::canonicalize(parts)
}

/// `{x : g(x) = x}` for a single map; a piece on the diagonal yields an interval.
pub fn fixed_points(g: &PwlMap) -> RootSet {
    let mut parts = Vec::new();
    if g.piece_count() == 0 {
        let (x, y) = &g.nodes()[0];
        if x == y {
            parts.push(Interval::point(x.clone()));
        }
    }
    for ((x0, y0), (x1, y1)) in g.pieces() {
        let h0 = y0 - x0;
        let h1 = y1 - x1;
        if h0.is_zero() && h1.is_zero() {
            parts.push(Interval {
                lo: x0.clone(),
                hi: x1.clone(),
            });
        } else if h0.is_zero() {
            parts.push(Interval::point(x0.clone()));
        } else if h1.is_zero() {
            parts.push(Interval::point(x1.clone()));
        } else if h0.is_positive() != h1.is_positive() {
            let x = x0 + &h0 * (x1 - x0) / (&h0 - &h1);
            parts.push(Interval::point(x));
        }
    }
    RootSet::canonicalize(parts)
}

fn check_window(f: &PwlMap, window: &Interval) -> Result<()> {
    if !f.domain().contains_interval(window) {
        return Err(Error::InvalidParameter(format!(
            "window {} is not inside the domain {}",
            window,
            f.domain()
        )));
    }
    if !f.is_endomorphism() {
        return Err(Error::InvalidMap(
            "iterated equations need a map of the interval into itself".into(),
        ));
    }
    Ok(())
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "iterate count must be positive".into(),
        ));
    }
    Ok(())
}

/// `f^k` restricted to `window`, built as `f ∘ (f^{k-1}|window)`.
pub fn windowed_iterate(f: &PwlMap, k: u32, window: &Interval, cap: usize) -> Result<PwlMap> {
    check_k(k)?;
    check_window(f, window)?;
    let mut g = f.restrict(window)?;
    for _ in 1..k {
        g = PwlMap::compose(f, &g)?;
        if g.piece_count() > cap {
            return Err(Error::PieceCap {
                pieces: g.piece_count(),
                cap,
            });
        }
    }
    Ok(g)
}

/// Solves `f^k(x) = c` on `window` from the full iterate `f^k`.
pub fn solve_by_iterate(f: &PwlMap, k: u32, c: &Rational, window: &Interval) -> Result<RootSet> {
    check_k(k)?;
    check_window(f, window)?;
    let fk = f.iterate(k)?;
    Ok(preimage(&fk.restrict(window)?, &Interval::point(c.clone())))
}

/// Solves `f^k(x) = c` on `window` by pulling the target back `k` times,
/// pruned at each depth by the exact forward image of the window.
pub fn solve_by_pullback(f: &PwlMap, k: u32, c: &Rational, window: &Interval) -> Result<RootSet> {
    check_k(k)?;
    check_window(f, window)?;
    let mut hulls = Vec::with_capacity(k as usize + 1);
    hulls.push(window.clone());
    for j in 0..k as usize {
        let next = f.image(&hulls[j]).expect("window lies in the domain");
        hulls.push(next);
    }
    if !hulls[k as usize].contains(c) {
        return Ok(RootSet::empty());
    }
    let mut target = RootSet::from_points([c.clone()]);
    for j in (0..k as usize).rev() {
        let local = f.restrict(&hulls[j])?;
        target = preimage_set(&local, &target);
        if target.is_empty() {
            break;
        }
    }
    Ok(target)
}

/// Solves `f^k(x) = c` on `window` with a windowed iterate, or by pullback when
/// the iterate would exceed the piece cap.
pub fn solve_iter_eq_const(f: &PwlMap, k: u32, c: &Rational, window: &Interval) -> Result<RootSet> {
    match windowed_iterate(f, k, window, piece_cap()) {
        Ok(g) => Ok(preimage(&g, &Interval::point(c.clone()))),
        Err(Error::PieceCap { .. }) => solve_by_pullback(f, k, c, window),
        Err(e) => Err(e),
    }
}

/// Runs both the full-iterate and the pullback strategy and insists they agree.
pub fn solve_iter_eq_const_checked(
    f: &PwlMap,
    k: u32,
    c: &Rational,
    window: &Interval,
) -> Result<RootSet> {
    let a = solve_by_iterate(f, k, c, window)?;
    let b = solve_by_pullback(f, k, c, window)?;
    if a != b {
        return Err(Error::StrategyMismatch(format!(
            "f^{k}(x) = {c} on {window}: iterate gives {a}, pullback gives {b}"
        )));
    }
    Ok(a)
}

/// `{x in window : f^k(x) = x}`.
pub fn solve_iter_fixed(f: &PwlMap, k: u32, window: &Interval) -> Result<RootSet> {
    let g = windowed_iterate(f, k, window, piece_cap())?;
    Ok(fixed_points(&g))
}

/// Memoizing solver for one map: keeps the chain `f^j|W` per window `W`.
#[derive(Debug)]
pub struct Solver {
    map: PwlMap,
    cap: usize,
    cache: Mutex<Cache>,
}

#[derive(Debug, Default)]
struct Cache {
    chains: HashMap<Interval, Vec<Arc<PwlMap>>>,
    pieces: usize,
}

const CACHE_PIECE_BUDGET: usize = 1 << 23;

impl Solver {
    pub fn new(map: &PwlMap) -> Result<Self> {
        Solver::with_cap(map, piece_cap())
    }

    pub fn with_cap(map: &PwlMap, cap: usize) -> Result<Self> {
        if !map.is_endomorphism() {
            return Err(Error::InvalidMap(
                "iterated equations need a map of the interval into itself".into(),
            ));
        }
        Ok(Solver {
            map: map.simplified(),
            cap,
            cache: Mutex::new(Cache::default()),
        })
    }

    pub fn map(&self) -> &PwlMap {
        &self.map
    }

    /// `f^k|window`, extending the cached chain for `window`.
    pub fn iterate_on(&self, k: u32, window: &Interval) -> Result<Arc<PwlMap>> {
        check_k(k)?;
        check_window(&self.map, window)?;
        let (mut chain, mut have) = {
            let cache = self.cache.lock().expect("solver cache poisoned");
            match cache.chains.get(window) {
                Some(c) if c.len() >= k as usize => return Ok(c[k as usize - 1].clone()),
                Some(c) => (c.clone(), c.len()),
                None => (Vec::new(), 0),
            }
        };
        if have == 0 {
            chain.push(Arc::new(self.map.restrict(window)?));
            have = 1;
        }
        while have < k as usize {
            let next = PwlMap::compose(&self.map, &chain[have - 1])?;
            if next.piece_count() > self.cap {
                return Err(Error::PieceCap {
                    pieces: next.piece_count(),
                    cap: self.cap,
                });
            }
            chain.push(Arc::new(next));
            have += 1;
        }
        let result = chain[k as usize - 1].clone();
        let mut cache = self.cache.lock().expect("solver cache poisoned");
        let added: usize = chain.iter().map(|g| g.piece_count()).sum();
        if cache.pieces + added > CACHE_PIECE_BUDGET {
            cache.chains.clear();
            cache.pieces = 0;
        }
        let stored = cache.chains.entry(window.clone()).or_default();
        if stored.len() < chain.len() {
            let old: usize = stored.iter().map(|g| g.piece_count()).sum();
            *stored = chain;
            cache.pieces = cache.pieces - old + added;
        }
        Ok(result)
    }

    pub fn eq_const(&self, k: u32, c: &Rational, window: &Interval) -> Result<RootSet> {
        match self.iterate_on(k, window) {
            Ok(g) => Ok(preimage(&g, &Interval::point(c.clone()))),
            Err(Error::PieceCap { .. }) => solve_by_pullback(&self.map, k, c, window),
            Err(e) => Err(e),
        }
    }

    pub fn fixed(&self, k: u32, window: &Interval) -> Result<RootSet> {
        Ok(fixed_points(&*self.iterate_on(k, window)?))
    }

    /// Extremal root of `f^k(x) = c` on `window`.
    pub fn extremal_eq(
        &self,
        side: Side,
        k: u32,
        c: &Rational,
        window: &Interval,
    ) -> Result<Option<Rational>> {
        Ok(self.eq_const(k, c, window)?.extremal(side, window))
    }

    /// Extremal root of `f^k(x) = x` on `window`.
    pub fn extremal_fixed(
        &self,
        side: Side,
        k: u32,
        window: &Interval,
    ) -> Result<Option<Rational>> {
        Ok(self.fixed(k, window)?.extremal(side, window))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{example_g, tent, truncate_tent};
    use crate::rational::{int, ratio};

    fn iv(a: Rational, b: Rational) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn pts(v: &[(i64, i64)]) -> RootSet {
        RootSet::from_points(v.iter().map(|&(p, q)| ratio(p, q)))
    }

    #[test]
    fn preimages() {
        let t = tent();
        assert_eq!(preimage(&t, &Interval::point(int(1))), pts(&[(1, 2)]));
        assert_eq!(
            preimage(&t, &iv(ratio(1, 2), int(1))),
            RootSet::canonicalize([iv(ratio(1, 4), ratio(3, 4))])
        );
        let h = truncate_tent(&ratio(6, 7)).unwrap();
        assert_eq!(
            preimage(&h, &Interval::point(ratio(6, 7))),
            RootSet::canonicalize([iv(ratio(3, 7), ratio(4, 7))])
        );
    }

    #[test]
    fn constant_targets() {
        let t = tent();
        let want = pts(&[(1, 12), (5, 12), (7, 12), (11, 12)]);
        assert_eq!(
            solve_iter_eq_const_checked(&t, 2, &ratio(1, 3), &Interval::unit()).unwrap(),
            want
        );
        let g = example_g();
        let w = iv(ratio(1, 6), ratio(1, 2));
        assert_eq!(
            solve_iter_eq_const(&g, 2, &ratio(1, 6), &w).unwrap(),
            pts(&[(5, 12)])
        );
        let r = solve_iter_eq_const_checked(&g, 4, &ratio(1, 6), &w).unwrap();
        assert_eq!(r.extremal(Side::Min, &w), Some(ratio(11, 48)));
    }

    #[test]
    fn fixed_targets() {
        let t = tent();
        assert_eq!(
            solve_iter_fixed(&t, 2, &Interval::unit()).unwrap(),
            pts(&[(0, 1), (2, 5), (2, 3), (4, 5)])
        );
        assert_eq!(
            solve_iter_fixed(&t, 1, &Interval::unit()).unwrap(),
            pts(&[(0, 1), (2, 3)])
        );
        let g = example_g();
        let w = iv(ratio(1, 6), ratio(1, 2));
        assert_eq!(
            solve_iter_fixed(&g, 2, &w).unwrap().extremal(Side::Min, &w),
            Some(ratio(1, 3))
        );
    }

    #[test]
    fn diagonal_piece_is_an_interval() {
        let id = PwlMap::identity(&Interval::unit());
        assert_eq!(
            solve_iter_fixed(&id, 3, &iv(ratio(1, 4), ratio(1, 2))).unwrap(),
            RootSet::canonicalize([iv(ratio(1, 4), ratio(1, 2))])
        );
    }

    #[test]
    fn solver_memo_matches_direct() {
        let t = tent();
        let s = Solver::new(&t).unwrap();
        let w = iv(ratio(1, 3), ratio(3, 7));
        for k in [5u32, 2, 7, 3] {
            assert_eq!(
                s.eq_const(k, &ratio(1, 3), &w).unwrap(),
                solve_by_pullback(&t, k, &ratio(1, 3), &w).unwrap()
            );
            assert_eq!(
                s.fixed(k, &w).unwrap(),
                solve_iter_fixed(&t, k, &w).unwrap()
            );
        }
    }

    #[test]
    fn pullback_past_the_cap() {
        let t = tent();
        let s = Solver::with_cap(&t, 8).unwrap();
        let r = s.eq_const(6, &ratio(1, 3), &Interval::unit()).unwrap();
        assert_eq!(
            r,
            solve_by_iterate(&t, 6, &ratio(1, 3), &Interval::unit()).unwrap()
        );
        assert_eq!(r.len(), 64);
        assert!(matches!(
            s.fixed(6, &Interval::unit()),
            Err(Error::PieceCap { .. })
        ));
    }
}
