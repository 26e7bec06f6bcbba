mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pwldyn::acceptance::{criterion_ids, run, CriterionResult};
use pwldyn::construct::{base_context, ContextDump, LabeledPoint, PointReport};
use pwldyn::periodic::{orbits_of_period, Orbit};
use pwldyn::pwl::{is_unimodal, CatalogMap};
use pwldyn::rational::{format_rational, parse_rational, Interval, Rational, RootSet};
use pwldyn::sharkovsky::{
    compare, minimal_witness_map, power2_map_approx, verify_closure, ClosureReport, Power2Approx,
};
use pwldyn::towers::{assemble_tower, Tower, TowerPlan, VerificationRow};
use pwldyn::{Error, PwlMap, Solver, Unimodality};

use output::{Envelope, Format, Table};

#[derive(Parser)]
#[command(
    name = "pwldyn",
    version,
    about = "Exact periodic orbits of piecewise-linear interval maps"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show and validate a map.
    Map {
        #[arg(long)]
        map: String,
    },
    /// Solve f^k(x) = c, or f^k(x) = x with --fixed.
    Solve {
        #[arg(long)]
        map: String,
        #[arg(short, long)]
        k: u32,
        #[arg(
            short,
            long,
            conflicts_with = "fixed",
            required_unless_present = "fixed"
        )]
        value: Option<String>,
        #[arg(long)]
        fixed: bool,
        /// Window as "lo,hi" (default: the domain).
        #[arg(long)]
        window: Option<String>,
    },
    /// Periodic orbits of one least period, or of all periods up to a bound.
    Orbits {
        #[arg(long)]
        map: String,
        #[arg(long, conflicts_with = "upto", required_unless_present = "upto")]
        period: Option<u64>,
        #[arg(long)]
        upto: Option<u64>,
    },
    /// Sharkovsky order queries and checks.
    Sharkovsky {
        #[command(subcommand)]
        action: SharkovskyCommand,
    },
    /// Base landmarks and the first tower layer for an odd-period orbit.
    Construct {
        #[arg(long)]
        map: String,
        /// Orbit points, comma separated.
        #[arg(long)]
        orbit: String,
        #[arg(long, default_value_t = 2)]
        layer1: u64,
    },
    /// The tower of periodic points through the third layer.
    Tower {
        #[arg(long)]
        map: String,
        #[arg(long)]
        orbit: String,
        #[arg(long, default_value_t = 1)]
        layer2: u64,
        #[arg(long, default_value_t = 1)]
        layer3: u64,
    },
    /// Run the acceptance suite.
    Verify {
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// CSV for plotting tools.
    PlotData {
        #[command(subcommand)]
        kind: PlotCommand,
    },
}

#[derive(Subcommand)]
enum SharkovskyCommand {
    Compare {
        m: u64,
        n: u64,
    },
    Closure {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 8)]
        upto: u64,
    },
    Witness {
        k: u64,
    },
    Power2 {
        #[arg(long, default_value_t = 1)]
        levels: u32,
    },
}

#[derive(Subcommand)]
enum PlotCommand {
    /// The map's nodes.
    Graph {
        #[arg(long)]
        map: String,
    },
    /// The orbit of a start point.
    Cobweb {
        #[arg(long)]
        map: String,
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// One row per periodic orbit of period up to a bound.
    OrbitRows {
        #[arg(long)]
        map: String,
        #[arg(long)]
        upto: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Ok,
    Failed,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PieceCap { .. } => 3,
        Error::ZeroDenominator
        | Error::ParseRational(_)
        | Error::InvalidMap(_)
        | Error::InvalidParameter(_)
        | Error::OutsideDomain { .. }
        | Error::UnsupportedPeriod(_)
        | Error::NotAnOrbit(_) => 2,
        _ => 1,
    }
}

fn load_map(spec: &str) -> pwldyn::Result<PwlMap> {
    if spec.ends_with(".json") || Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {spec}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| Error::InvalidMap(e.to_string()));
    }
    spec.parse::<CatalogMap>()?.build()
}

fn parse_list(s: &str) -> pwldyn::Result<Vec<Rational>> {
    s.split(',').map(|t| parse_rational(t.trim())).collect()
}

fn parse_window(s: Option<&str>, f: &PwlMap) -> pwldyn::Result<Interval> {
    match s {
        None => Ok(f.domain().clone()),
        Some(s) => match parse_list(s)?.as_slice() {
            [lo, hi] => Interval::new(lo.clone(), hi.clone()),
            _ => Err(Error::InvalidParameter(format!(
                "window must be \"lo,hi\", got {s:?}"
            ))),
        },
    }
}

#[derive(Serialize, Deserialize)]
struct MapInfo {
    map: PwlMap,
    pieces: usize,
    endomorphism: bool,
    unimodality: Unimodality,
}

#[derive(Serialize, Deserialize)]
struct SolveResult {
    k: u32,
    #[serde(with = "pwldyn::rational::serde_rat_opt")]
    value: Option<Rational>,
    window: Interval,
    roots: RootSet,
}

#[derive(Serialize, Deserialize)]
struct OrbitList {
    orbits: Vec<Orbit>,
}

#[derive(Serialize, Deserialize)]
struct Comparison {
    m: u64,
    n: u64,
    relation: String,
}

#[derive(Serialize, Deserialize)]
struct Construction {
    context: ContextDump,
    layer1: PointReport,
    pass: bool,
}

#[derive(Serialize, Deserialize)]
struct TowerOutput {
    families:
        std::collections::BTreeMap<String, std::collections::BTreeMap<String, Vec<LabeledPoint>>>,
    tower: Tower,
}

#[derive(Serialize, Deserialize)]
struct VerifyOutput {
    criteria: Vec<CriterionResult>,
    pass: bool,
}

fn point_rows(points: &[LabeledPoint]) -> Table {
    let mut t = Table::new(&["label", "value", "exponent", "claimed", "actual", "pass"]);
    for p in points {
        t.push(vec![
            p.label.to_string(),
            format_rational(&p.value),
            p.exponent.to_string(),
            p.claim
                .as_ref()
                .map(|c| c.period.to_string())
                .unwrap_or_default(),
            p.least_period.map(|x| x.to_string()).unwrap_or_default(),
            if p.claim.is_some() {
                p.verified.to_string()
            } else {
                String::new()
            },
        ]);
    }
    t
}

fn verification_table(rows: &[VerificationRow]) -> Table {
    let mut t = Table::new(&[
        "label",
        "value",
        "claimed",
        "actual",
        "guaranteed",
        "status",
    ]);
    for r in rows {
        t.push(vec![
            r.label.to_string(),
            r.value.clone().unwrap_or_default(),
            r.claimed.map(|x| x.to_string()).unwrap_or_default(),
            r.actual.map(|x| x.to_string()).unwrap_or_default(),
            r.guaranteed.to_string(),
            format!("{:?}", r.status).to_lowercase(),
        ]);
    }
    t
}

fn orbit_table(orbits: &[Orbit]) -> Table {
    let mut t = Table::new(&["period", "points", "diameter"]);
    for o in orbits {
        t.push(vec![
            o.least_period.to_string(),
            o.points
                .iter()
                .map(format_rational)
                .collect::<Vec<_>>()
                .join(" "),
            format_rational(&o.diameter),
        ]);
    }
    t
}

/// Runs a command, printing its output; the returned exit says whether checks failed.
fn execute(cli: &Cli) -> pwldyn::Result<Exit> {
    let fmt = cli.format;
    match &cli.command {
        Command::Map { map } => {
            let f = load_map(map)?;
            let mut t = Table::new(&["x", "y"]);
            for (x, y) in f.nodes() {
                t.push(vec![format_rational(x), format_rational(y)]);
            }
            let info = MapInfo {
                pieces: f.piece_count(),
                endomorphism: f.is_endomorphism(),
                unimodality: is_unimodal(&f),
                map: f,
            };
            Envelope::new("map", info).emit(fmt, &t);
        }
        Command::Solve {
            map,
            k,
            value,
            fixed,
            window,
        } => {
            let f = load_map(map)?;
            let window = parse_window(window.as_deref(), &f)?;
            let solver = Solver::new(&f)?;
            let (value, roots) = if *fixed {
                (None, solver.fixed(*k, &window)?)
            } else {
                let c = parse_rational(value.as_deref().expect("clap requires a value"))?;
                let roots = solver.eq_const(*k, &c, &window)?;
                (Some(c), roots)
            };
            let mut t = Table::new(&["lo", "hi"]);
            for c in roots.components() {
                t.push(vec![format_rational(&c.lo), format_rational(&c.hi)]);
            }
            Envelope::new(
                "solve",
                SolveResult {
                    k: *k,
                    value,
                    window,
                    roots,
                },
            )
            .emit(fmt, &t);
        }
        Command::Orbits { map, period, upto } => {
            let f = load_map(map)?;
            let periods = match (period, upto) {
                (Some(p), _) => *p..=*p,
                (None, Some(n)) => 1..=*n,
                (None, None) => unreachable!("clap requires one of the two"),
            };
            let mut orbits = Vec::new();
            for n in periods {
                orbits.extend(orbits_of_period(&f, n)?);
            }
            let t = orbit_table(&orbits);
            Envelope::new("orbits", OrbitList { orbits }).emit(fmt, &t);
        }
        Command::Sharkovsky { action } => return sharkovsky(action, fmt),
        Command::Construct { map, orbit, layer1 } => {
            let f = load_map(map)?;
            let ctx = base_context(&f, &parse_list(orbit)?)?;
            let rep = ctx.layer1(*layer1)?;
            let mut points = ctx.landmarks();
            points.extend(rep.points.iter().cloned());
            let t = point_rows(&points);
            let pass = rep.pass() && ctx.guards.iter().all(|g| g.holds);
            Envelope::new(
                "construct",
                Construction {
                    context: ctx.dump(),
                    layer1: rep,
                    pass,
                },
            )
            .emit(fmt, &t);
            return Ok(if pass { Exit::Ok } else { Exit::Failed });
        }
        Command::Tower {
            map,
            orbit,
            layer2,
            layer3,
        } => {
            let f = load_map(map)?;
            let ctx = base_context(&f, &parse_list(orbit)?)?;
            let tower = assemble_tower(&ctx, TowerPlan::new(*layer2, *layer3))?;
            let mut points = ctx.landmarks();
            points.extend(
                tower
                    .layer1
                    .points
                    .iter()
                    .chain(
                        tower
                            .compartments
                            .iter()
                            .flat_map(|c| c.report.points.iter()),
                    )
                    .cloned(),
            );
            points.sort_by(|a, b| a.value.cmp(&b.value));
            let t = if fmt == Format::Table {
                point_rows(&points)
            } else {
                verification_table(&tower.verification)
            };
            let pass = tower.pass;
            Envelope::new(
                "tower",
                TowerOutput {
                    families: tower.families(),
                    tower,
                },
            )
            .emit(fmt, &t);
            return Ok(if pass { Exit::Ok } else { Exit::Failed });
        }
        Command::Verify { only } => {
            let ids: Vec<u8> = if only.is_empty() {
                criterion_ids().collect()
            } else {
                only.clone()
            };
            let mut criteria = Vec::new();
            for id in ids {
                let r =
                    run(id).ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
                if fmt == Format::Table {
                    println!("{}", r.line());
                }
                criteria.push(r);
            }
            let pass = criteria.iter().all(|r| r.pass);
            if fmt != Format::Table {
                let mut t = Table::new(&["id", "name", "pass", "elapsed_ms", "detail"]);
                for r in &criteria {
                    t.push(vec![
                        r.id.to_string(),
                        r.name.clone(),
                        r.pass.to_string(),
                        r.elapsed_ms.to_string(),
                        r.detail.clone(),
                    ]);
                }
                Envelope::new("verify", VerifyOutput { criteria, pass }).emit(fmt, &t);
            }
            return Ok(if pass { Exit::Ok } else { Exit::Failed });
        }
        Command::PlotData { kind } => output::plot(kind_args(kind)?)?,
    }
    Ok(Exit::Ok)
}

fn kind_args(kind: &PlotCommand) -> pwldyn::Result<output::Plot> {
    Ok(match kind {
        PlotCommand::Graph { map } => output::Plot::Graph(load_map(map)?),
        PlotCommand::Cobweb { map, start, steps } => {
            output::Plot::Cobweb(load_map(map)?, parse_rational(start)?, *steps)
        }
        PlotCommand::OrbitRows { map, upto } => output::Plot::OrbitRows(load_map(map)?, *upto),
    })
}

fn sharkovsky(action: &SharkovskyCommand, fmt: Format) -> pwldyn::Result<Exit> {
    match action {
        SharkovskyCommand::Compare { m, n } => {
            if *m == 0 || *n == 0 {
                return Err(Error::InvalidParameter("periods must be positive".into()));
            }
            let relation = compare(*m, *n).symbol().to_string();
            if fmt == Format::Table {
                println!("{m} {relation} {n}");
            } else {
                let mut t = Table::new(&["m", "relation", "n"]);
                t.push(vec![m.to_string(), relation.clone(), n.to_string()]);
                Envelope::new(
                    "sharkovsky compare",
                    Comparison {
                        m: *m,
                        n: *n,
                        relation,
                    },
                )
                .emit(fmt, &t);
            }
        }
        SharkovskyCommand::Closure { map, upto } => {
            let r: ClosureReport = verify_closure(&load_map(map)?, *upto)?;
            let mut t = Table::new(&["have", "missing"]);
            for v in &r.violations {
                t.push(vec![v.have.to_string(), v.missing.to_string()]);
            }
            if fmt == Format::Table {
                let periods: Vec<String> = r.period_set.iter().map(u64::to_string).collect();
                println!("periods up to {upto}: {{{}}}", periods.join(", "));
                println!("closed: {}", r.pass);
            }
            let pass = r.pass;
            Envelope::new("sharkovsky closure", r).emit(fmt, &t);
            return Ok(if pass { Exit::Ok } else { Exit::Failed });
        }
        SharkovskyCommand::Witness { k } => {
            let f = minimal_witness_map(*k)?;
            let mut t = Table::new(&["x", "y"]);
            for (x, y) in f.nodes() {
                t.push(vec![format_rational(x), format_rational(y)]);
            }
            Envelope::new("sharkovsky witness", f).emit(fmt, &t);
        }
        SharkovskyCommand::Power2 { levels } => {
            let a: Power2Approx = power2_map_approx(*levels)?;
            let mut t = orbit_table(&a.chain);
            t.push(vec!["q0".into(), format_rational(&a.q0), String::new()]);
            t.push(vec!["q1".into(), format_rational(&a.q1), String::new()]);
            Envelope::new("sharkovsky power2", a).emit(fmt, &t);
        }
    }
    Ok(Exit::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(Exit::Ok) => ExitCode::SUCCESS,
        Ok(Exit::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
