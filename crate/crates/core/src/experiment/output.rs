//! CSV tables and the generated plot script.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// A cell that is either a number or missing (`NA`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Missing,
}

impl Cell {
    pub fn trusted(value: f64, trusted: bool) -> Self {
        if trusted && value.is_finite() {
            Cell::Num(value)
        } else {
            Cell::Missing
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::trusted(v, true)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        "NA".into()
    }
}

/// An in-memory CSV table, rendered with `\n` line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn missing_cells(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_missing()).count()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Num(v) => out.push_str(&format_number(*v)),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Missing => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

/// A matplotlib script that redraws the curves (and error table, when
/// present) from the CSV files next to it.
pub fn plot_script(title: &str, with_convergence: bool) -> String {
    let mut s = String::from(
        r#"#!/usr/bin/env python3
# Regenerates the plots from the CSV files in this directory.
import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(here, name), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body))
    return header, [[float(v) if v != "NA" else float("nan") for v in c] for c in cols]


header, cols = read("curves.csv")
x = cols[0]
fig, ax = plt.subplots()
ax.plot(x, cols[1], "k-", linewidth=2, label="f")
for name, col in zip(header[2:], cols[2:]):
    ax.plot(x, col, "--", label=name)
ax.set_xlabel("x")
ax.legend()
"#,
    );
    let _ = writeln!(s, "ax.set_title({title:?})");
    s.push_str("fig.savefig(os.path.join(here, \"curves.png\"), dpi=150)\n");
    if with_convergence {
        s.push_str(
            r#"
header, cols = read("convergence.csv")
fig, ax = plt.subplots()
ax.loglog(cols[0], cols[3], "o-", label="sup error")
ax.loglog(cols[0], cols[4], "s-", label="weighted error")
ax.set_xlabel("n")
ax.legend()
fig.savefig(os.path.join(here, "convergence.png"), dpi=150)
"#,
        );
    }
    s
}
