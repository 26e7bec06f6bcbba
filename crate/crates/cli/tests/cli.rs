use std::process::{Command, Output};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use pwldyn::construct::LabeledPoint;
use pwldyn::periodic::Orbit;
use pwldyn::towers::Tower;

fn pwldyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwldyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    command: String,
    result: T,
}

#[derive(Serialize, Deserialize)]
struct OrbitList {
    orbits: Vec<Orbit>,
}

#[derive(Serialize, Deserialize)]
struct TowerOutput {
    families: BTreeMap<String, BTreeMap<String, Vec<LabeledPoint>>>,
    tower: Tower,
}

fn round_trips<T: Serialize + for<'de> Deserialize<'de>>(text: &str) -> Envelope<T> {
    let parsed: Envelope<T> = serde_json::from_str(text).unwrap();
    assert_eq!(
        serde_json::to_string_pretty(&parsed).unwrap(),
        text.trim_end()
    );
    parsed
}

#[test]
fn compare_prints_relation() {
    let o = pwldyn(&["sharkovsky", "compare", "3", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "3 ≺ 5");
    let o = pwldyn(&["sharkovsky", "compare", "2", "6"]);
    assert_eq!(stdout(&o).trim(), "2 ≻ 6");
}

#[test]
fn tent_period_two_orbit_json() {
    let o = pwldyn(&[
        "orbits", "--map", "tent", "--period", "2", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope<OrbitList> = round_trips(&stdout(&o));
    assert_eq!(env.schema, "v1");
    assert_eq!(env.result.orbits.len(), 1);
    let pts: Vec<String> = env.result.orbits[0]
        .points
        .iter()
        .map(|x| x.to_string())
        .collect();
    assert_eq!(pts, ["2/5", "4/5"]);
}

#[test]
fn construct_table_has_d() {
    let o = pwldyn(&[
        "construct",
        "--map",
        "example_g",
        "--orbit",
        "0,1/2,1",
        "--format",
        "table",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out
        .lines()
        .find(|l| l.split_whitespace().next() == Some("d"))
        .unwrap();
    assert_eq!(row.split_whitespace().nth(1), Some("1/6"));
}

#[test]
fn tower_json_round_trips_and_passes() {
    let o = pwldyn(&[
        "tower",
        "--map",
        "tent",
        "--orbit",
        "2/7,4/7,6/7",
        "--layer2",
        "1",
        "--layer3",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let env: Envelope<TowerOutput> = round_trips(&stdout(&o));
    assert!(env.result.tower.pass);
    assert!(env.result.tower.verification.iter().all(|r| r.pass));
    assert!(env.result.families.contains_key("plain"));
}

#[test]
fn tower_listing_starts_with_tilde_points() {
    let o = pwldyn(&[
        "tower", "--map", "g", "--orbit", "0,1/2,1", "--layer2", "2", "--layer3", "1",
    ]);
    let out = stdout(&o);
    let tilde_q: Vec<&str> = out
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .filter(|l| l.starts_with("tilde.q[") && !l.contains(','))
        .collect();
    assert_eq!(tilde_q, ["tilde.q[0]", "tilde.q[1]", "tilde.q[2]"]);
}

#[test]
fn plot_data_csv() {
    let o = pwldyn(&["plot-data", "graph", "--map", "tent"]);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4);
    assert_eq!(out.lines().nth(2), Some("1/2,1/1,0.5,1"));

    let o = pwldyn(&[
        "plot-data",
        "cobweb",
        "--map",
        "g",
        "--start",
        "2/9",
        "--steps",
        "8",
    ]);
    let xs: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(
        xs,
        ["2/9", "13/18", "5/9", "8/9", "2/9", "13/18", "5/9", "8/9"]
    );

    let o = pwldyn(&["plot-data", "orbit-rows", "--map", "tent", "--upto", "3"]);
    let periods: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(periods, ["1", "1", "2", "3", "3"]);
}

#[test]
fn solve_csv_and_exit_codes() {
    let o = pwldyn(&[
        "solve", "--map", "tent", "-k", "2", "--value", "1/2", "--format", "csv",
    ]);
    assert_eq!(stdout(&o), "lo,hi\n1/8,1/8\n3/8,3/8\n5/8,5/8\n7/8,7/8\n");
    assert_eq!(
        pwldyn(&["solve", "--map", "tent", "-k", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        pwldyn(&["orbits", "--map", "nope", "--period", "2"])
            .status
            .code(),
        Some(2)
    );
    let capped = Command::new(env!("CARGO_BIN_EXE_pwldyn"))
        .args(["solve", "--map", "tent", "-k", "10", "--fixed"])
        .env("PWLDYN_PIECE_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));
}

#[test]
fn verify_subset() {
    let o = pwldyn(&["verify", "--only", "1,3,12"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn map_file_input() {
    let dir = std::env::temp_dir().join(format!("pwldyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("g.json");
    std::fs::write(
        &path,
        r#"{"domain":["0","1"],"nodes":[["0","1/2"],["1/2","1"],["1","0"]]}"#,
    )
    .unwrap();
    let o = pwldyn(&[
        "orbits",
        "--map",
        path.to_str().unwrap(),
        "--period",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2/9 13/18 5/9 8/9") || stdout(&o).contains("2/9 5/9 13/18 8/9"));
}
