//! A small brute-force oracle on `i128` fractions. It shares no code with the
//! library: iterated equations are solved by enumerating piece itineraries.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num::{BigInt, BigRational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frac {
    pub n: i128,
    pub d: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn fr(n: i128, d: i128) -> Frac {
    assert!(d != 0);
    let g = gcd(n, d).max(1);
    let s = if d < 0 { -1 } else { 1 };
    Frac {
        n: s * n / g,
        d: s * d / g,
    }
}

impl Frac {
    pub fn add(self, o: Frac) -> Frac {
        let d = self.d.checked_mul(o.d).expect("overflow");
        let n = self
            .n
            .checked_mul(o.d)
            .and_then(|a| o.n.checked_mul(self.d).and_then(|b| a.checked_add(b)));
        fr(n.expect("overflow"), d)
    }
    pub fn neg(self) -> Frac {
        Frac {
            n: -self.n,
            d: self.d,
        }
    }
    pub fn sub(self, o: Frac) -> Frac {
        self.add(o.neg())
    }
    pub fn mul(self, o: Frac) -> Frac {
        let g1 = gcd(self.n, o.d).max(1);
        let g2 = gcd(o.n, self.d).max(1);
        fr(
            (self.n / g1).checked_mul(o.n / g2).expect("overflow"),
            (self.d / g2).checked_mul(o.d / g1).expect("overflow"),
        )
    }
    pub fn div(self, o: Frac) -> Frac {
        assert!(o.n != 0);
        self.mul(fr(o.d, o.n))
    }
    pub fn is_zero(self) -> bool {
        self.n == 0
    }
    pub fn big(self) -> BigRational {
        BigRational::new(BigInt::from(self.n), BigInt::from(self.d))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, o: &Frac) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Frac {
    fn cmp(&self, o: &Frac) -> Ordering {
        (self.n.checked_mul(o.d).expect("overflow"))
            .cmp(&o.n.checked_mul(self.d).expect("overflow"))
    }
}

type Pair = (i128, i128);

/// Continuous piecewise-linear map given by its nodes.
#[derive(Debug, Clone)]
pub struct Map {
    pub nodes: Vec<(Frac, Frac)>,
}

impl Map {
    pub fn new(nodes: &[(Pair, Pair)]) -> Map {
        Map {
            nodes: nodes
                .iter()
                .map(|&((a, b), (c, d))| (fr(a, b), fr(c, d)))
                .collect(),
        }
    }

    pub fn tent() -> Map {
        Map::new(&[((0, 1), (0, 1)), ((1, 2), (1, 1)), ((1, 1), (0, 1))])
    }

    pub fn g() -> Map {
        Map::new(&[((0, 1), (1, 2)), ((1, 2), (1, 1)), ((1, 1), (0, 1))])
    }

    /// Slope and intercept of piece `j`.
    fn affine(&self, j: usize) -> (Frac, Frac) {
        let ((x0, y0), (x1, y1)) = (self.nodes[j], self.nodes[j + 1]);
        let a = y1.sub(y0).div(x1.sub(x0));
        (a, y0.sub(a.mul(x0)))
    }

    pub fn eval(&self, x: Frac) -> Frac {
        for j in 0..self.nodes.len() - 1 {
            let (x0, x1) = (self.nodes[j].0, self.nodes[j + 1].0);
            if x0 <= x && x <= x1 {
                let (a, b) = self.affine(j);
                return a.mul(x).add(b);
            }
        }
        panic!("{x:?} outside the domain")
    }

    pub fn eval_k(&self, x: Frac, k: usize) -> Frac {
        (0..k).fold(x, |y, _| self.eval(y))
    }

    /// Solutions of `f^k(x) = c` (or `f^k(x) = x` when `c` is `None`) on
    /// `[lo, hi]`; `None` when some solution set is a nondegenerate interval.
    pub fn solve(&self, k: usize, c: Option<Frac>, lo: Frac, hi: Frac) -> Option<BTreeSet<Frac>> {
        let mut out = BTreeSet::new();
        let ok = self.walk(k, c, (fr(1, 1), fr(0, 1)), lo, hi, &mut out);
        ok.then_some(out)
    }

    fn walk(
        &self,
        left: usize,
        c: Option<Frac>,
        (a, b): (Frac, Frac),
        lo: Frac,
        hi: Frac,
        out: &mut BTreeSet<Frac>,
    ) -> bool {
        if lo > hi {
            return true;
        }
        if left == 0 {
            // a x + b = c, or a x + b = x.
            let (slope, rhs) = match c {
                Some(c) => (a, c.sub(b)),
                None => (a.sub(fr(1, 1)), b.neg()),
            };
            if slope.is_zero() {
                if !rhs.is_zero() {
                    return true;
                }
                if lo == hi {
                    out.insert(lo);
                    return true;
                }
                return false;
            }
            let x = rhs.div(slope);
            if lo <= x && x <= hi {
                out.insert(x);
            }
            return true;
        }
        for j in 0..self.nodes.len() - 1 {
            let (p0, p1) = (self.nodes[j].0, self.nodes[j + 1].0);
            // Restrict x so that a x + b lies in [p0, p1].
            let (mut l, mut h) = (lo, hi);
            if a.is_zero() {
                if !(p0 <= b && b <= p1) {
                    continue;
                }
            } else {
                let (s, t) = (p0.sub(b).div(a), p1.sub(b).div(a));
                let (s, t) = if s <= t { (s, t) } else { (t, s) };
                l = l.max(s);
                h = h.min(t);
                if l > h {
                    continue;
                }
            }
            let (pa, pb) = self.affine(j);
            if !self.walk(left - 1, c, (pa.mul(a), pa.mul(b).add(pb)), l, h, out) {
                return false;
            }
        }
        true
    }

    pub fn least_period(&self, x: Frac, bound: usize) -> Option<usize> {
        let mut y = x;
        for j in 1..=bound {
            y = self.eval(y);
            if y == x {
                return Some(j);
            }
        }
        None
    }
}
