//! The acceptance criteria as runnable checks, shared by the test harness and the CLI.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::{base_context, ConstructionContext, Family, Kind, Label};
use crate::error::{Error, Result};
use crate::periodic::{orbits_of_period, period_set, smallest_diameter_orbit, verify_nested};
use crate::pwl::{example_g, tent, truncate_tent, PwlMap};
use crate::random::{random_map, random_unit_rational, seeded_map};
use crate::rational::{format_rational, int, ratio, Interval, Rational};
use crate::sharkovsky::{
    compare, minimal_witness_map, power2_map_approx, successors, verify_closure, Precedence,
};
use crate::solve::{solve_by_iterate, solve_by_pullback, Solver};
use crate::towers::{assemble_tower, verify_nonexistence, GapCheck, RowStatus, TowerPlan};

/// Random maps checked for the closure property.
pub const CLOSURE_RANDOM_MAPS: usize = 200;
/// Random `(map, k, c)` triples compared between the two solvers.
pub const ORACLE_TRIPLES: usize = 100;
/// Membership samples per triple.
pub const ORACLE_SAMPLES: usize = 1000;
/// Random pairs and triples for the order laws.
pub const ORDER_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub elapsed_ms: u128,
    pub budget_ms: u128,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({} ms of {} ms): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_ms,
            self.budget_ms,
            self.detail
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(u8, &str, u64, Check); 12] = [
    (1, "example map golden values", 1, golden_values),
    (2, "example map orbit facts", 5, g_orbit_facts),
    (3, "degenerate starred point", 1, degenerate_star),
    (4, "tent counts", 30, tent_counts),
    (5, "minimal witness maps", 120, witness_maps),
    (6, "closure of period sets", 300, closure),
    (7, "power-of-two approximation", 120, power2),
    (8, "nested orbit hulls", 60, nested),
    (9, "first tower layer", 120, first_layer),
    (10, "second and third tower layers", 600, deeper_layers),
    (11, "solver oracle equivalence", 120, oracle_equivalence),
    (12, "order laws", 10, order_laws),
];

pub fn criterion_ids() -> impl Iterator<Item = u8> {
    CRITERIA.iter().map(|c| c.0)
}

pub fn run(id: u8) -> Option<CriterionResult> {
    let &(id, name, budget_s, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let budget = Duration::from_secs(budget_s);
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= budget;
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; over time budget")
    };
    Some(CriterionResult {
        id,
        name: name.to_string(),
        pass: ok && in_time,
        detail,
        elapsed_ms: elapsed.as_millis(),
        budget_ms: budget.as_millis(),
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    criterion_ids().filter_map(run).collect()
}

pub fn g_context() -> Result<ConstructionContext> {
    base_context(&example_g(), &[int(0), ratio(1, 2), int(1)])
}

pub fn tent_context() -> Result<ConstructionContext> {
    base_context(&tent(), &[ratio(2, 7), ratio(4, 7), ratio(6, 7)])
}

fn set(xs: &[Rational]) -> BTreeSet<Rational> {
    xs.iter().cloned().collect()
}

fn fails(problems: Vec<String>, ok: String) -> (bool, String) {
    if problems.is_empty() {
        (true, ok)
    } else {
        (false, problems.join("; "))
    }
}

fn expect_eq(problems: &mut Vec<String>, what: &str, got: Option<&Rational>, want: Rational) {
    if got != Some(&want) {
        problems.push(format!(
            "{what} = {} (want {})",
            got.map(format_rational).unwrap_or_else(|| "missing".into()),
            format_rational(&want)
        ));
    }
}

fn golden_values() -> Result<(bool, String)> {
    let ctx = g_context()?;
    let l1 = ctx.layer1(2)?;
    let plain = |kind, n: &[u64]| Label::new(Family::Plain, kind, n);
    let mut p = Vec::new();
    expect_eq(&mut p, "d", Some(&ctx.d), ratio(1, 6));
    expect_eq(&mut p, "v", Some(&ctx.v), ratio(1, 2));
    expect_eq(&mut p, "z", Some(&ctx.z), ratio(2, 3));
    expect_eq(&mut p, "z0", Some(&ctx.z0), ratio(2, 3));
    expect_eq(&mut p, "c[1]", l1.get(&plain(Kind::C, &[1])), ratio(1, 3));
    expect_eq(&mut p, "c[2]", l1.get(&plain(Kind::C, &[2])), ratio(2, 9));
    expect_eq(&mut p, "u[1]", l1.get(&plain(Kind::U, &[1])), ratio(5, 12));
    expect_eq(&mut p, "u[2]", l1.get(&plain(Kind::U, &[2])), ratio(11, 48));
    expect_eq(
        &mut p,
        "bar.c[1]",
        l1.get(&Label::new(Family::Bar, Kind::C, &[1])),
        ratio(5, 9),
    );
    expect_eq(
        &mut p,
        "plain.u'[1,1]",
        Some(&ctx.plain_u_prime(1, 1)?),
        ratio(7, 24),
    );
    Ok(fails(
        p,
        "d, v, z, z0, c, u, bar c and u'[1,1] = 7/24 exact".into(),
    ))
}

fn g_orbit_facts() -> Result<(bool, String)> {
    let g = example_g();
    let mut p = Vec::new();
    let four = orbits_of_period(&g, 4)?;
    let want = set(&[ratio(2, 9), ratio(13, 18), ratio(5, 9), ratio(8, 9)]);
    if four.len() != 1 || set(&four[0].points) != want {
        p.push(format!("period-4 orbits: {four:?}"));
    }
    let six = orbits_of_period(&g, 6)?;
    if six.len() != 2 {
        p.push(format!("{} period-6 orbits", six.len()));
    }
    if six.iter().any(|o| o.min() < &ratio(1, 6)) {
        p.push("a period-6 point lies below 1/6".into());
    }
    Ok(fails(
        p,
        "one period-4 orbit, two period-6 orbits above 1/6".into(),
    ))
}

fn degenerate_star() -> Result<(bool, String)> {
    let ctx = g_context()?;
    let rep = ctx.remark3_points(1)?;
    let label = |i| Label::new(Family::Tilde, Kind::CStar, &[i]);
    let find = |i| rep.points.iter().find(|p| p.label == label(i));
    let mut p = Vec::new();
    match find(0) {
        Some(pt) if pt.value == int(0) && pt.least_period == Some(3) => {}
        other => p.push(format!("c'*[0]: {other:?}")),
    }
    match find(1) {
        Some(pt) if pt.least_period == Some(8) => {}
        other => p.push(format!("c'*[1]: {other:?}")),
    }
    Ok(fails(
        p,
        "c'*[0] = 0 has least period 3; c'*[1] has period 8".into(),
    ))
}

fn tent_counts() -> Result<(bool, String)> {
    let t = tent();
    let solver = Solver::new(&t)?;
    let mut p = Vec::new();
    for k in 1..=12u32 {
        let n = solver
            .fixed(k, &Interval::unit())?
            .points()
            .map(|v| v.len());
        if n != Some(1 << k) {
            p.push(format!("T^{k} has {n:?} fixed points"));
        }
    }
    let two = orbits_of_period(&t, 2)?;
    if two.len() != 1 || set(&two[0].points) != set(&[ratio(2, 5), ratio(4, 5)]) {
        p.push(format!("period-2 orbits: {two:?}"));
    }
    let three = orbits_of_period(&t, 3)?;
    if three.len() != 2 {
        p.push(format!("{} period-3 orbits", three.len()));
    }
    let p3 = smallest_diameter_orbit(&t, 3)?;
    if set(&p3.points) != set(&[ratio(2, 7), ratio(4, 7), ratio(6, 7)]) {
        p.push(format!("smallest period-3 orbit {p3:?}"));
    }
    Ok(fails(
        p,
        "2^k fixed points for k <= 12; {2/5, 4/5}; P3 = {2/7, 4/7, 6/7}".into(),
    ))
}

fn witness_maps() -> Result<(bool, String)> {
    let mut p = Vec::new();
    for k in 2..=8u64 {
        let w = minimal_witness_map(k)?;
        let orbits = orbits_of_period(&w, k)?;
        let pk = smallest_diameter_orbit(&tent(), k)?;
        if orbits.len() != 1 || set(&orbits[0].points) != set(&pk.points) {
            p.push(format!("k = {k}: {} period-{k} orbits", orbits.len()));
        }
        let want: BTreeSet<u64> = std::iter::once(k).chain(successors(k, 10)).collect();
        let got = period_set(&w, 10)?;
        if got != want {
            p.push(format!("k = {k}: periods {got:?}, want {want:?}"));
        }
    }
    Ok(fails(
        p,
        "k = 2..8: unique period-k orbit and exact period sets".into(),
    ))
}

fn closure() -> Result<(bool, String)> {
    let mut maps: Vec<(String, PwlMap)> = vec![("tent".into(), tent()), ("g".into(), example_g())];
    for h in [ratio(2, 3), ratio(6, 7), int(1)] {
        maps.push((
            format!("truncated tent {}", format_rational(&h)),
            truncate_tent(&h)?,
        ));
    }
    for k in 2..=8 {
        maps.push((format!("witness {k}"), minimal_witness_map(k)?));
    }
    let mut p = Vec::new();
    for (name, f) in &maps {
        let r = verify_closure(f, 8)?;
        if !r.pass {
            p.push(format!("{name}: {:?}", r.violations));
        }
    }
    let (mut checked, mut skipped, mut seed) = (0, 0, 0u64);
    while checked < CLOSURE_RANDOM_MAPS {
        let f = seeded_map(seed, 6);
        seed += 1;
        match verify_closure(&f, 8) {
            Ok(r) => {
                checked += 1;
                if !r.pass {
                    p.push(format!("seed {}: {:?}", seed - 1, r.violations));
                }
            }
            Err(Error::InfinitePeriodicSet(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
        if seed > 10 * CLOSURE_RANDOM_MAPS as u64 {
            p.push("too many random maps skipped".into());
            break;
        }
    }
    Ok(fails(
        p,
        format!(
            "{} catalog maps and {checked} random maps closed ({skipped} skipped)",
            maps.len()
        ),
    ))
}

fn power2() -> Result<(bool, String)> {
    let a = power2_map_approx(2)?;
    let mut p = Vec::new();
    if !(a.q0 <= ratio(2, 5) && ratio(2, 5) < ratio(4, 5) && ratio(4, 5) <= a.q1) {
        p.push(format!(
            "q0 = {}, q1 = {}",
            format_rational(&a.q0),
            format_rational(&a.q1)
        ));
    }
    let periods = period_set(&a.map, 8)?;
    let allowed: BTreeSet<u64> = [1, 2, 4, 8].into();
    if !periods.is_subset(&allowed) || !periods.is_superset(&[1, 2, 4].into()) {
        p.push(format!("period set {periods:?}"));
    }
    Ok(fails(
        p,
        format!(
            "q0 = {}, q1 = {}, periods {periods:?}",
            format_rational(&a.q0),
            format_rational(&a.q1)
        ),
    ))
}

fn nested() -> Result<(bool, String)> {
    let mut p = Vec::new();
    let mut orbits = 0;
    for (name, f) in [("tent", tent()), ("g", example_g())] {
        let r = verify_nested(&f, 6)?;
        orbits += r.orbits.len();
        if !r.pass {
            p.push(format!("{name}: {:?}", r.violations));
        }
    }
    Ok(fails(
        p,
        format!("{orbits} orbits nested with f(max P) = min P"),
    ))
}

fn first_layer() -> Result<(bool, String)> {
    let mut p = Vec::new();
    let mut points = 0;
    for (name, ctx) in [("g", g_context()?), ("tent", tent_context()?)] {
        let rep = ctx.layer1(4)?;
        points += rep.points.iter().filter(|x| x.claim.is_some()).count();
        if !rep.pass() || !rep.skipped.is_empty() {
            let bad: Vec<String> = rep
                .points
                .iter()
                .filter(|x| !x.verified)
                .map(|x| format!("{} period {:?}", x.label, x.least_period))
                .chain(
                    rep.chains
                        .iter()
                        .filter(|c| !c.holds)
                        .map(|c| c.violations.join(", ")),
                )
                .chain(rep.missing.iter().map(|m| format!("{} missing", m.label)))
                .collect();
            p.push(format!("{name}: {}", bad.join("; ")));
        }
    }
    Ok(fails(
        p,
        format!("{points} periodic points verified, chains hold"),
    ))
}

fn deeper_layers() -> Result<(bool, String)> {
    let mut p = Vec::new();
    let mut rows = 0;
    let mut gaps = 0;
    for (name, ctx) in [("g", g_context()?), ("tent", tent_context()?)] {
        let tower = assemble_tower(&ctx, TowerPlan::new(2, 2))?;
        rows += tower.verification.len();
        for c in tower.compartments.iter().filter(|c| !c.pass()) {
            let chains: Vec<String> = c
                .report
                .chains
                .iter()
                .filter(|x| !x.holds)
                .flat_map(|x| x.violations.clone())
                .collect();
            p.push(format!(
                "{name} {} {:?}: chains [{}], hulls disjoint {}",
                c.family,
                c.indices,
                chains.join(", "),
                c.hulls.disjoint
            ));
        }
        for r in tower
            .verification
            .iter()
            .filter(|r| !r.pass || r.status == RowStatus::Skipped)
        {
            p.push(format!("{name} {} {:?}", r.label, r.status));
        }
        if !tower.section_violations.is_empty() || !tower.labels_unique {
            p.push(format!("{name}: sections {:?}", tower.section_violations));
        }
        let mut checks: Vec<GapCheck> = (1..=3).map(|n| GapCheck::Base { n }).collect();
        checks.push(GapCheck::Second { n: 1, i: 1 });
        checks.push(GapCheck::Third { n: 1, k: 1, i: 1 });
        for gap in checks {
            let r = verify_nonexistence(&ctx, gap)?;
            gaps += 1;
            if !r.pass {
                p.push(format!("{name} {gap:?}: periods {:?}", r.violations));
            }
        }
    }
    Ok(fails(
        p,
        format!("{rows} table rows verified, {gaps} nonexistence checks"),
    ))
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let unit = Interval::unit();
    let mut p = Vec::new();
    let mut roots = 0;
    for t in 0..ORACLE_TRIPLES {
        let f = random_map(&mut rng, 4);
        let k: u32 = rng.gen_range(1..=8);
        let c = random_unit_rational(&mut rng, 97);
        let a = solve_by_iterate(&f, k, &c, &unit)?;
        let b = solve_by_pullback(&f, k, &c, &unit)?;
        if a != b {
            p.push(format!("triple {t}: {a} vs {b}"));
            continue;
        }
        let fk = f.iterate(k)?;
        let mut samples: Vec<Rational> = (0..ORACLE_SAMPLES)
            .map(|_| random_unit_rational(&mut rng, 1000))
            .collect();
        for comp in a.components() {
            samples.push(comp.lo.clone());
            samples.push(comp.hi.clone());
            samples.push(comp.midpoint());
            roots += 1;
        }
        for x in samples {
            let mut y = x.clone();
            for _ in 0..k {
                y = f.eval(&y)?;
            }
            if (y == c) != a.contains(&x) || fk.eval(&x)? != y {
                p.push(format!(
                    "triple {t}: membership of {} disagrees",
                    format_rational(&x)
                ));
                break;
            }
        }
    }
    Ok(fails(
        p,
        format!("{ORACLE_TRIPLES} triples agree, {roots} root components sampled"),
    ))
}

fn order_laws() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draw = |rng: &mut ChaCha8Rng| -> u64 {
        // Mix small values, powers of two and large odd multiples.
        match rng.gen_range(0..3) {
            0 => rng.gen_range(1..=64),
            1 => 1 << rng.gen_range(0..20),
            _ => rng.gen_range(1..=1_000_000),
        }
    };
    let mut p = Vec::new();
    for _ in 0..ORDER_PAIRS {
        let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let ab = compare(a, b);
        if (ab == Precedence::Equals) != (a == b) {
            p.push(format!("totality fails at ({a}, {b})"));
        }
        let ba = compare(b, a);
        let flipped = match ab {
            Precedence::Precedes => Precedence::Follows,
            Precedence::Follows => Precedence::Precedes,
            Precedence::Equals => Precedence::Equals,
        };
        if ba != flipped {
            p.push(format!("antisymmetry fails at ({a}, {b})"));
        }
        if ab == Precedence::Precedes
            && compare(b, c) == Precedence::Precedes
            && compare(a, c) != Precedence::Precedes
        {
            p.push(format!("transitivity fails at ({a}, {b}, {c})"));
        }
        if p.len() > 5 {
            break;
        }
    }
    if (1..=10_000).any(|n| n != 3 && compare(3, n) != Precedence::Precedes) {
        p.push("3 is not the head".into());
    }
    let tail_ok = compare(4, 2) == Precedence::Precedes
        && compare(2, 1) == Precedence::Precedes
        && (1..=10_000)
            .filter(|n| ![1, 2, 4].contains(n))
            .all(|n| compare(n, 4) == Precedence::Precedes);
    if !tail_ok {
        p.push("tail is not ... 4, 2, 1".into());
    }
    Ok(fails(
        p,
        format!("{ORDER_PAIRS} random pairs and triples; head 3; tail 4, 2, 1"),
    ))
}
