use std::io::{self, Write};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use pwldyn::periodic::orbits_of_period;
use pwldyn::rational::{format_rational, to_decimal, Rational};
use pwldyn::PwlMap;

/// Significant digits of the decimal columns in plot CSV.
const PLOT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Versioned JSON wrapper for every command's result.
#[derive(Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub command: String,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, result: T) -> Self {
        Envelope {
            schema: "v1".into(),
            command: command.into(),
            result,
        }
    }

    pub fn emit(&self, fmt: Format, table: &Table) {
        match fmt {
            Format::Json => {
                let text = serde_json::to_string_pretty(self).expect("output types serialize");
                println!("{text}");
            }
            Format::Csv => table.write_csv(),
            Format::Table => table.print(),
        }
    }
}

pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Table {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write_csv(&self) {
        let mut w = csv::Writer::from_writer(io::stdout());
        w.write_record(&self.headers).expect("stdout");
        for r in &self.rows {
            w.write_record(r).expect("stdout");
        }
        w.flush().expect("stdout");
    }

    fn print(&self) {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let out = io::stdout();
        let mut out = out.lock();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "{}", line(&self.headers));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
    }
}

pub enum Plot {
    Graph(PwlMap),
    Cobweb(PwlMap, Rational, usize),
    OrbitRows(PwlMap, u64),
}

fn dec(x: &Rational) -> String {
    to_decimal(x, PLOT_DIGITS)
}

/// Plot data is always CSV, with exact and decimal columns.
pub fn plot(p: Plot) -> pwldyn::Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout());
    let mut put = |r: Vec<String>| w.write_record(&r).expect("stdout");
    match p {
        Plot::Graph(f) => {
            put(vec![
                "x".into(),
                "y".into(),
                "x_decimal".into(),
                "y_decimal".into(),
            ]);
            for (x, y) in f.nodes() {
                put(vec![format_rational(x), format_rational(y), dec(x), dec(y)]);
            }
        }
        Plot::Cobweb(f, start, steps) => {
            put(vec![
                "step".into(),
                "x".into(),
                "fx".into(),
                "x_decimal".into(),
                "fx_decimal".into(),
            ]);
            let mut x = start;
            for step in 0..steps {
                let fx = f.eval(&x)?;
                put(vec![
                    step.to_string(),
                    format_rational(&x),
                    format_rational(&fx),
                    dec(&x),
                    dec(&fx),
                ]);
                x = fx;
            }
        }
        Plot::OrbitRows(f, upto) => {
            put(
                ["period", "orbit", "points", "points_decimal", "min", "max"]
                    .map(String::from)
                    .to_vec(),
            );
            for n in 1..=upto {
                for (i, o) in orbits_of_period(&f, n)?.iter().enumerate() {
                    put(vec![
                        n.to_string(),
                        i.to_string(),
                        o.points
                            .iter()
                            .map(format_rational)
                            .collect::<Vec<_>>()
                            .join(";"),
                        o.points.iter().map(dec).collect::<Vec<_>>().join(";"),
                        format_rational(o.min()),
                        format_rational(o.max()),
                    ]);
                }
            }
        }
    }
    w.flush().expect("stdout");
    Ok(())
}
