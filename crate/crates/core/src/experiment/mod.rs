//! Config-driven runs: evaluate the operator on a grid for each `n`, write
//! CSV tables and an optional plot script.
//!
//! Everything is computed before any file is written, and every table has a
//! fixed row and column order, so identical configs give identical bytes.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

pub use config::{
    apply_overrides, load_config, parse_config, validate_config, Diagnostics, ExperimentConfig, OutputSet,
    DEFAULT_N_LIST,
};
pub use output::{format_number, plot_script, Cell, Table};

use crate::analysis::{convergence_run, grid_error, rate_bound, EvalGrid};
use crate::error::{Error, Result};
use crate::operators::{baskakov_beta_apply_grid, central_moment, moments_closed, InnerIntegration};

const FIGURE1: &str = include_str!("../../configs/figure1.toml");
const FIGURE2: &str = include_str!("../../configs/figure2.toml");

pub const BUILTIN_CONFIGS: [&str; 2] = ["figure1", "figure2"];

/// One of the shipped configs by name.
pub fn builtin_config(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "figure1" => FIGURE1,
        "figure2" => FIGURE2,
        other => {
            return Err(Error::Config(format!(
                "unknown built-in config '{other}' (known: {})",
                BUILTIN_CONFIGS.join(", ")
            )))
        }
    };
    Ok(parse_config(text, &[])?)
}

/// Files written by a run and the cells or rows that could not be trusted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub flagged: Vec<String>,
}

impl RunReport {
    /// 0 when every value was trusted, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.flagged.is_empty() {
            0
        } else {
            2
        }
    }
}

/// All tables a config asks for, keyed by file name, in write order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tables {
    pub tables: Vec<(&'static str, Table)>,
    pub flagged: Vec<String>,
}

pub fn compute_tables(cfg: &ExperimentConfig) -> Tables {
    let mut out = Tables::default();
    if cfg.outputs.curves {
        let t = curves_table(cfg, &mut out.flagged);
        out.tables.push(("curves.csv", t));
    }
    if cfg.outputs.moments {
        let t = moments_table(cfg, &mut out.flagged);
        out.tables.push(("moments.csv", t));
    }
    if cfg.outputs.convergence {
        let t = convergence_table(cfg, &mut out.flagged);
        out.tables.push(("convergence.csv", t));
    }
    if cfg.outputs.bounds {
        let t = bounds_table(cfg, &mut out.flagged);
        out.tables.push(("bounds.csv", t));
    }
    out
}

/// `x, f, D_n=<n>...`, one row per grid point.
pub fn curves_table(cfg: &ExperimentConfig, flagged: &mut Vec<String>) -> Table {
    let xs = cfg.grid.to_vec();
    let columns: Vec<std::result::Result<Vec<Cell>, String>> = thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .n_list
            .iter()
            .map(|&n| {
                let xs = &xs;
                scope.spawn(move || -> std::result::Result<Vec<Cell>, String> {
                    let pair = cfg.source.pair(n).map_err(|e| e.to_string())?;
                    let values = baskakov_beta_apply_grid(&pair, &cfg.function, n, xs, &cfg.policy, InnerIntegration::Auto)
                        .map_err(|e| e.to_string())?;
                    Ok(values.iter().map(|r| Cell::trusted(r.value, r.trusted)).collect())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("evaluation panicked".into())))
            .collect()
    });

    let mut header = vec!["x".to_string(), "f".to_string()];
    header.extend(cfg.n_list.iter().map(|n| format!("D_n={n}")));
    let mut table = Table::new(header);
    let columns: Vec<Vec<Cell>> = columns
        .into_iter()
        .zip(&cfg.n_list)
        .map(|(c, n)| {
            c.unwrap_or_else(|e| {
                flagged.push(format!("curves.csv: column D_n={n} failed: {e}"));
                vec![Cell::Missing; xs.len()]
            })
        })
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let f = match cfg.function.eval(x) {
            Ok(v) => Cell::from(v),
            Err(_) => Cell::Missing,
        };
        let mut row = vec![Cell::Num(x), f];
        row.extend(columns.iter().map(|c| c[i]));
        table.push(row);
    }
    let missing = table.missing_cells();
    if missing > 0 {
        flagged.push(format!("curves.csv: {missing} cells untrusted (NA)"));
    }
    table
}

/// `n, x, M0, M1, M2, mu1, mu2` from the closed forms.
pub fn moments_table(cfg: &ExperimentConfig, flagged: &mut Vec<String>) -> Table {
    let mut table = Table::new(["n", "x", "M0", "M1", "M2", "mu1", "mu2"]);
    let xs = cfg.grid.to_vec();
    for &n in &cfg.n_list {
        let pair = cfg.source.pair(n);
        for &x in &xs {
            let cell = |v: Result<f64>| v.map(Cell::from).unwrap_or(Cell::Missing);
            let row = match &pair {
                Ok(pr) => vec![
                    Cell::Int(n as u64),
                    Cell::Num(x),
                    cell(moments_closed(pr, 0, n, x)),
                    cell(moments_closed(pr, 1, n, x)),
                    cell(moments_closed(pr, 2, n, x)),
                    cell(central_moment(pr, 1, n, x)),
                    cell(central_moment(pr, 2, n, x)),
                ],
                Err(_) => {
                    let mut r = vec![Cell::Int(n as u64), Cell::Num(x)];
                    r.extend([Cell::Missing; 5]);
                    r
                }
            };
            table.push(row);
        }
    }
    let missing = table.missing_cells();
    if missing > 0 {
        flagged.push(format!("moments.csv: {missing} cells undefined (NA)"));
    }
    table
}

/// `n, p_n, q_n, sup_error, weighted_error, mu2_max`.
pub fn convergence_table(cfg: &ExperimentConfig, flagged: &mut Vec<String>) -> Table {
    let rows = convergence_run(&cfg.source, &cfg.function, &cfg.n_list, &cfg.grid, &cfg.policy);
    let mut table = Table::new(["n", "p_n", "q_n", "sup_error", "weighted_error", "mu2_max"]);
    for r in rows {
        if let Some(reason) = &r.failure {
            flagged.push(format!("convergence.csv: row n = {} failed: {reason}", r.n));
        } else if !r.trusted {
            flagged.push(format!("convergence.csv: row n = {} untrusted", r.n));
        }
        let ok = r.failure.is_none() && r.trusted;
        table.push(vec![
            Cell::Int(r.n as u64),
            Cell::from(r.p),
            Cell::from(r.q),
            Cell::trusted(r.sup_error, ok),
            Cell::trusted(r.weighted_error, ok),
            Cell::from(r.mu2_max),
        ]);
    }
    table
}

/// `n, p_n, q_n, kappa, L, bound, argmax, sup_error`, with the measured
/// sup-error on `[0, kappa]` next to the bound.
pub fn bounds_table(cfg: &ExperimentConfig, flagged: &mut Vec<String>) -> Table {
    let mut table = Table::new(["n", "p_n", "q_n", "kappa", "L", "bound", "argmax", "sup_error"]);
    let points = (cfg.kappa / cfg.grid.spacing()).round().max(1.0) as usize + 1;
    for &n in &cfg.n_list {
        let row = cfg.source.pair(n).and_then(|pair| {
            let bound = rate_bound(&pair, n, &cfg.function, cfg.kappa, &cfg.grid)?;
            let window = EvalGrid::new(0.0, cfg.kappa, points)?;
            let err = grid_error(&pair, n, &cfg.function, &window, &cfg.policy)?;
            Ok(vec![
                Cell::Int(n as u64),
                Cell::from(pair.p()),
                Cell::from(pair.q()),
                Cell::from(cfg.kappa),
                Cell::from(bound.l_constant),
                Cell::from(bound.value),
                Cell::from(bound.argmax),
                Cell::trusted(err.sup_error, err.trusted),
            ])
        });
        match row {
            Ok(r) => {
                if r.iter().any(Cell::is_missing) {
                    flagged.push(format!("bounds.csv: row n = {n} untrusted"));
                }
                table.push(r);
            }
            Err(e) => {
                flagged.push(format!("bounds.csv: row n = {n} failed: {e}"));
                let mut r = vec![Cell::Int(n as u64)];
                r.extend([Cell::Missing; 7]);
                table.push(r);
            }
        }
    }
    table
}

/// Where a run writes: the explicit directory, else the config's `output`,
/// else `out/<name>`.
pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(if cfg.name.is_empty() { "run" } else { &cfg.name }))
}

/// Computes every requested table, then writes them into `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    let tables = compute_tables(cfg);
    let io = |e: std::io::Error, p: &Path| Error::Config(format!("cannot write {}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let mut report = RunReport {
        files: Vec::new(),
        flagged: tables.flagged,
    };
    for (name, table) in &tables.tables {
        let path = dir.join(name);
        table.write(&path).map_err(|e| io(e, &path))?;
        report.files.push(path);
    }
    if cfg.outputs.plot {
        let path = dir.join("plot.py");
        let title = if cfg.name.is_empty() { "D_n(f, x)" } else { &cfg.name };
        fs::write(&path, plot_script(title, cfg.outputs.convergence)).map_err(|e| io(e, &path))?;
        report.files.push(path);
    }
    Ok(report)
}
