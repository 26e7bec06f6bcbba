mod common;

use std::collections::BTreeSet;

use common::{fr, Frac, Map};
use pwldyn::construct::{base_context, Family, Kind, Label};
use pwldyn::pwl::{example_g, tent, PwlMap};
use pwldyn::random::seeded_map;
use pwldyn::rational::{ratio, Interval, Rational};
use pwldyn::solve::{solve_by_pullback, solve_iter_eq_const, Solver};
use pwldyn::towers::{
    aux_nu, layer2_compartment, layer3_compartment, verify_nonexistence, GapCheck,
};

fn big(xs: &BTreeSet<Frac>) -> Vec<Rational> {
    xs.iter().map(|x| x.big()).collect()
}

fn min(s: BTreeSet<Frac>) -> Frac {
    *s.iter().next().expect("nonempty")
}

fn max(s: BTreeSet<Frac>) -> Frac {
    *s.iter().next_back().expect("nonempty")
}

fn unit() -> (Frac, Frac) {
    (fr(0, 1), fr(1, 1))
}

fn oracle_of(f: &PwlMap) -> Map {
    let to = |x: &Rational| fr(x.numer().try_into().unwrap(), x.denom().try_into().unwrap());
    Map {
        nodes: f.nodes().iter().map(|(x, y)| (to(x), to(y))).collect(),
    }
}

#[test]
fn tent_fixed_points_have_closed_form() {
    let t = Map::tent();
    let solver = Solver::new(&tent()).unwrap();
    for k in 1..=10u32 {
        let (lo, hi) = unit();
        let found = t.solve(k as usize, None, lo, hi).unwrap();
        let mut closed = BTreeSet::new();
        for q in [(1i128 << k) + 1, (1i128 << k) - 1] {
            for j in 0..=q / 2 {
                closed.insert(fr(2 * j, q));
            }
        }
        assert_eq!(found, closed, "k = {k}");
        assert_eq!(found.len(), 1 << k);
        let engine = solver
            .fixed(k, &Interval::unit())
            .unwrap()
            .points()
            .unwrap();
        assert_eq!(engine, big(&found), "k = {k}");
    }
}

#[test]
fn example_map_fixed_points_match() {
    let g = Map::g();
    let solver = Solver::new(&example_g()).unwrap();
    for k in 1..=9u32 {
        let (lo, hi) = unit();
        let found = g.solve(k as usize, None, lo, hi).unwrap();
        let engine = solver
            .fixed(k, &Interval::unit())
            .unwrap()
            .points()
            .unwrap();
        assert_eq!(engine, big(&found), "k = {k}");
    }
}

#[test]
fn random_level_sets_match() {
    let mut compared = 0;
    for seed in 0..60u64 {
        let f = seeded_map(1000 + seed, 3);
        let o = oracle_of(&f);
        for k in 1..=4u32 {
            let c = ratio((seed % 97) as i64, 97);
            let (lo, hi) = unit();
            let Some(found) = o.solve(k as usize, Some(fr((seed % 97) as i128, 97)), lo, hi) else {
                continue;
            };
            let w = Interval::unit();
            let a = solve_by_pullback(&f, k, &c, &w).unwrap();
            let b = solve_iter_eq_const(&f, k, &c, &w).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.points().unwrap(), big(&found), "seed {seed}, k {k}");
            compared += 1;
        }
    }
    assert!(compared > 150);
}

/// Example-map scaffolding, located independently.
struct GPoints {
    d: Frac,
    v: Frac,
    u1: Frac,
    u2: Frac,
    u3: Frac,
}

fn g_points() -> GPoints {
    let g = Map::g();
    let (zero, one) = unit();
    let v = min(g.solve(1, Some(fr(1, 1)), zero, one).unwrap());
    let z0 = min(g.solve(2, None, v, one).unwrap());
    let d = max(g.solve(2, Some(z0), zero, v).unwrap());
    let u = |n: usize| min(g.solve(2 * n, Some(d), d, v).unwrap());
    GPoints {
        d,
        v,
        u1: u(1),
        u2: u(2),
        u3: u(3),
    }
}

#[test]
fn example_map_scaffolding_is_frozen() {
    let p = g_points();
    assert_eq!(
        (p.d, p.v, p.u1, p.u2, p.u3),
        (fr(1, 6), fr(1, 2), fr(5, 12), fr(11, 48), fr(35, 192))
    );
    let ctx = base_context(&example_g(), &[ratio(0, 1), ratio(1, 2), ratio(1, 1)]).unwrap();
    assert_eq!(ctx.u(3).unwrap(), p.u3.big());
}

#[test]
fn example_map_plain_compartment() {
    let g = Map::g();
    let p = g_points();
    let up = |k: usize| max(g.solve(2 + 2 * k, Some(p.d), p.u2, p.u1).unwrap());
    let (up1, up2) = (up(1), up(2));
    let nu = max(g.solve(2, Some(p.v), p.d, p.u1).unwrap());
    let u112 = min(g.solve(8, Some(p.d), up1, up2).unwrap());
    let c1 = max(g.solve(4, None, p.u2, p.u1).unwrap());
    let q1 = max(g.solve(7, None, p.u2, up1).unwrap());
    let p1 = min(g.solve(7, None, p.u2, p.u1).unwrap());
    assert_eq!(
        (up1, up2, nu, u112, c1),
        (fr(7, 24), fr(37, 96), fr(1, 4), fr(59, 192), fr(1, 3))
    );
    assert_eq!(
        (
            g.least_period(c1, 4),
            g.least_period(q1, 7),
            g.least_period(p1, 7)
        ),
        (Some(2), Some(7), Some(7))
    );

    let ctx = base_context(&example_g(), &[ratio(0, 1), ratio(1, 2), ratio(1, 1)]).unwrap();
    let c = layer2_compartment(&ctx, Family::Plain, 1, 2).unwrap();
    let get = |kind, idx: &[u64]| c.report.get(&Label::new(Family::Plain, kind, idx)).cloned();
    assert_eq!(get(Kind::UPrime, &[1, 1]), Some(up1.big()));
    assert_eq!(get(Kind::UPrime, &[1, 2]), Some(up2.big()));
    assert_eq!(get(Kind::CPrime, &[1, 1]), Some(c1.big()));
    assert_eq!(get(Kind::Q, &[1, 1]), Some(q1.big()));
    assert_eq!(get(Kind::P, &[1, 1]), Some(p1.big()));
    assert_eq!(c.nu.point.value, nu.big());
    let c3 = layer3_compartment(&ctx, Family::Plain, 1, 1, 2).unwrap();
    assert_eq!(
        c3.report
            .get(&Label::new(Family::Plain, Kind::U, &[1, 1, 2])),
        Some(&u112.big())
    );
}

#[test]
fn tent_plain_nu_and_tilde_point() {
    let t = Map::tent();
    let (zero, one) = unit();
    let min_p = fr(2, 7);
    let v = min(t.solve(1, Some(fr(6, 7)), zero, one).unwrap());
    let z0 = min(t.solve(2, None, v, one).unwrap());
    let d = max(t.solve(2, Some(z0), zero, v).unwrap());
    let u = |n: usize| min(t.solve(2 * n, Some(d), d, v).unwrap());
    let (u1, u2) = (u(1), u(2));
    let roots = t.solve(2, Some(v), d, u1).unwrap();
    let nu = *roots.iter().rev().find(|x| u2 < **x && **x < u1).unwrap();
    assert_eq!((v, d, u1, nu), (fr(3, 7), fr(1, 3), fr(5, 12), fr(11, 28)));

    let mu_p = |n: usize| max(t.solve(3 + 2 * n, Some(d), min_p, d).unwrap());
    let (a, b) = (mu_p(0), mu_p(1));
    let mu = |k: usize| min(t.solve(3 + 2 * k, Some(d), a, b).unwrap());
    let q = max(t.solve(7, None, mu(2), mu(1)).unwrap());
    assert_eq!(t.least_period(q, 7), Some(7));

    let ctx = base_context(&tent(), &[ratio(2, 7), ratio(4, 7), ratio(6, 7)]).unwrap();
    assert_eq!(
        aux_nu(&ctx, Family::Plain, &[1]).unwrap().point.value,
        nu.big()
    );
    let c = layer3_compartment(&ctx, Family::Tilde, 0, 1, 1).unwrap();
    let got = c
        .report
        .points
        .iter()
        .find(|p| p.label == Label::new(Family::Tilde, Kind::Q, &[0, 1, 1]))
        .unwrap();
    assert_eq!(got.value, q.big());
    assert_eq!(got.least_period, Some(7));
}

fn periods_in(m: &Map, lo: Frac, hi: Frac, bound: usize) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for j in 1..=bound {
        for x in m.solve(j, None, lo, hi).unwrap() {
            out.insert(m.least_period(x, j).unwrap() as u64);
        }
    }
    out
}

#[test]
fn nonexistence_matches_enumeration() {
    let p = g_points();
    let want = periods_in(&Map::g(), p.d, p.u2, 5);
    assert!(want.iter().all(|&t| t == 4));
    let ctx = base_context(&example_g(), &[ratio(0, 1), ratio(1, 2), ratio(1, 1)]).unwrap();
    let r = verify_nonexistence(&ctx, GapCheck::Base { n: 2 }).unwrap();
    assert_eq!(r.found, want.into_iter().collect::<Vec<_>>());
    assert!(r.pass);

    let want = periods_in(&Map::tent(), fr(1, 3), fr(5, 12), 3);
    assert!(want.iter().all(|t| t % 2 == 0));
    let ctx = base_context(&tent(), &[ratio(2, 7), ratio(4, 7), ratio(6, 7)]).unwrap();
    let r = verify_nonexistence(&ctx, GapCheck::Base { n: 1 }).unwrap();
    assert_eq!(r.found, want.into_iter().collect::<Vec<_>>());
}
