//! Target functions for the operators: polynomials, a small registry of named
//! functions and piecewise-linear tabulations.

use std::fmt;

use crate::error::{Error, Result};

/// Registered named functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedFunction {
    /// `e_0(t) = 1`
    One,
    /// `e_1(t) = t`
    Identity,
    /// `e_2(t) = t^2`
    Square,
    /// `|t - 1|`
    AbsShift,
    Sin,
    Cos,
    /// `exp(-t)`
    ExpNeg,
    Sqrt,
    Log1p,
}

impl NamedFunction {
    pub const ALL: [NamedFunction; 9] = [
        NamedFunction::One,
        NamedFunction::Identity,
        NamedFunction::Square,
        NamedFunction::AbsShift,
        NamedFunction::Sin,
        NamedFunction::Cos,
        NamedFunction::ExpNeg,
        NamedFunction::Sqrt,
        NamedFunction::Log1p,
    ];

    pub fn identifier(self) -> &'static str {
        match self {
            NamedFunction::One => "e0",
            NamedFunction::Identity => "e1",
            NamedFunction::Square => "e2",
            NamedFunction::AbsShift => "abs_shift",
            NamedFunction::Sin => "sin",
            NamedFunction::Cos => "cos",
            NamedFunction::ExpNeg => "exp_neg",
            NamedFunction::Sqrt => "sqrt",
            NamedFunction::Log1p => "log1p",
        }
    }

    pub fn from_identifier(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.identifier() == id)
    }

    /// A valid `C_f` with `|f(t)| <= C_f (1 + t^2)` on `[0, inf)`.
    pub fn growth_bound(self) -> f64 {
        match self {
            NamedFunction::AbsShift => 2.0,
            _ => 1.0,
        }
    }

    fn eval(self, t: f64) -> Result<f64> {
        Ok(match self {
            NamedFunction::One => 1.0,
            NamedFunction::Identity => t,
            NamedFunction::Square => t * t,
            NamedFunction::AbsShift => (t - 1.0).abs(),
            NamedFunction::Sin => t.sin(),
            NamedFunction::Cos => t.cos(),
            NamedFunction::ExpNeg => (-t).exp(),
            NamedFunction::Sqrt => {
                if t < 0.0 {
                    return Err(Error::Evaluation {
                        t,
                        reason: "sqrt of a negative argument".into(),
                    });
                }
                t.sqrt()
            }
            NamedFunction::Log1p => {
                if t <= -1.0 {
                    return Err(Error::Evaluation {
                        t,
                        reason: "log1p needs t > -1".into(),
                    });
                }
                t.ln_1p()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    /// Coefficients in ascending degree.
    Polynomial(Vec<f64>),
    Named(NamedFunction),
    /// Piecewise-linear interpolation of `values` over the strictly increasing
    /// `grid`; undefined outside `[grid[0], grid[last]]`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// A target function `f` plus optional growth metadata `C_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    kind: FunctionKind,
    growth_bound: Option<f64>,
}

impl FunctionSpec {
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFunction(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFunction(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(FunctionSpec {
            kind: FunctionKind::Polynomial(coefficients),
            growth_bound: None,
        })
    }

    pub fn constant(c: f64) -> Self {
        FunctionSpec {
            kind: FunctionKind::Polynomial(vec![c]),
            growth_bound: None,
        }
    }

    /// `e_m(t) = t^m`.
    pub fn monomial(m: u32) -> Self {
        let mut coefficients = vec![0.0; m as usize + 1];
        coefficients[m as usize] = 1.0;
        FunctionSpec {
            kind: FunctionKind::Polynomial(coefficients),
            growth_bound: None,
        }
    }

    pub fn named(f: NamedFunction) -> Self {
        FunctionSpec {
            kind: FunctionKind::Named(f),
            growth_bound: None,
        }
    }

    pub fn named_by_id(id: &str) -> Result<Self> {
        NamedFunction::from_identifier(id)
            .map(Self::named)
            .ok_or_else(|| {
                let known: Vec<_> = NamedFunction::ALL.iter().map(|f| f.identifier()).collect();
                Error::InvalidFunction(format!(
                    "unknown named function '{id}' (known: {})",
                    known.join(", ")
                ))
            })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidFunction(
                "tabulated function needs matching grid and values of length >= 2".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidFunction(
                "tabulation grid must be strictly increasing".into(),
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("tabulation must be finite".into()));
        }
        Ok(FunctionSpec {
            kind: FunctionKind::Tabulated { grid, values },
            growth_bound: None,
        })
    }

    /// Attach `C_f`, checked by sampling `|f(t)| <= C_f (1 + t^2)`.
    pub fn with_growth_bound(mut self, c_f: f64) -> Result<Self> {
        if !(c_f > 0.0 && c_f.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "growth bound C_f must be positive, got {c_f}"
            )));
        }
        for t in self.growth_samples() {
            let v = match self.eval(t) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if v.abs() > c_f * (1.0 + t * t) * (1.0 + 1e-12) {
                return Err(Error::InvalidFunction(format!(
                    "|f({t})| = {} exceeds C_f (1 + t^2) = {}",
                    v.abs(),
                    c_f * (1.0 + t * t)
                )));
            }
        }
        self.growth_bound = Some(c_f);
        Ok(self)
    }

    fn growth_samples(&self) -> Vec<f64> {
        match &self.kind {
            FunctionKind::Tabulated { grid, .. } => grid.iter().copied().filter(|&t| t >= 0.0).collect(),
            _ => {
                let mut s: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
                s.extend((1..=60).map(|i| 10f64.powf(1.0 + i as f64 * 0.05)));
                s
            }
        }
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn growth_bound(&self) -> Option<f64> {
        self.growth_bound
    }

    /// The coefficient list when `f` is a polynomial, including the named
    /// monomials `e0`, `e1`, `e2`.
    pub fn polynomial_coefficients(&self) -> Option<Vec<f64>> {
        match &self.kind {
            FunctionKind::Polynomial(c) => Some(c.clone()),
            FunctionKind::Named(NamedFunction::One) => Some(vec![1.0]),
            FunctionKind::Named(NamedFunction::Identity) => Some(vec![0.0, 1.0]),
            FunctionKind::Named(NamedFunction::Square) => Some(vec![0.0, 0.0, 1.0]),
            _ => None,
        }
    }

    /// Degree of the polynomial with trailing zero coefficients ignored.
    pub fn polynomial_degree(&self) -> Option<usize> {
        self.polynomial_coefficients()
            .map(|c| c.iter().rposition(|&v| v != 0.0).unwrap_or(0))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match &self.kind {
            FunctionKind::Polynomial(c) => Ok(horner(c, t)),
            FunctionKind::Named(f) => f.eval(t),
            FunctionKind::Tabulated { grid, values } => interpolate(grid, values, t),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FunctionKind::Polynomial(c) => {
                let terms: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(k, v)| match k {
                        0 => format!("{v}"),
                        1 => format!("{v}*t"),
                        _ => format!("{v}*t^{k}"),
                    })
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", terms.join(" + "))
                }
            }
            FunctionKind::Named(n) => write!(f, "{}", n.identifier()),
            FunctionKind::Tabulated { grid, .. } => write!(f, "tabulated({} points)", grid.len()),
        }
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

fn interpolate(grid: &[f64], values: &[f64], t: f64) -> Result<f64> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(t >= lo && t <= hi) {
        return Err(Error::Evaluation {
            t,
            reason: format!("outside the tabulated range [{lo}, {hi}]"),
        });
    }
    let i = grid.partition_point(|&g| g <= t).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[i - 1], grid[i]);
    let w = (t - x0) / (x1 - x0);
    Ok(values[i - 1] * (1.0 - w) + values[i] * w)
}
