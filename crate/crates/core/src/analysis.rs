//! Moduli of continuity, weighted errors, local and rate error bounds, and
//! convergence runs along parameter schedules.
//!
//! Suprema over `x` are taken on a uniform [`EvalGrid`]. Moduli use steps
//! that are whole multiples of the grid spacing, so they are lower bounds of
//! the continuous suprema that tighten as the grid is refined.

use std::thread;

use crate::calculus::{PQPair, TruncationPolicy};
use crate::error::{domain, Error, Result};
use crate::function::FunctionSpec;
use crate::operators::{baskakov_beta_apply_grid, central_moment, InnerIntegration};

/// Uniform grid `start, start + h, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGrid {
    start: f64,
    stop: f64,
    points: usize,
}

impl EvalGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        if !(start >= 0.0 && start.is_finite()) {
            return Err(domain(format!("grid start must be finite and >= 0, got {start}")));
        }
        if !(stop > start && stop.is_finite()) {
            return Err(domain(format!("grid stop must exceed start, got [{start}, {stop}]")));
        }
        if points < 2 {
            return Err(domain(format!("grid needs at least 2 points, got {points}")));
        }
        Ok(EvalGrid { start, stop, points })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.stop
        } else {
            self.start + i as f64 * self.spacing()
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.point(i)).collect()
    }
}

/// The weight `σ(x) = 1 + x^2` of the polynomial-growth class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeightFunction;

impl WeightFunction {
    pub fn eval(&self, x: f64) -> f64 {
        1.0 + x * x
    }
}

/// Parameter sequences `(p_n, q_n)` with `0 < q_n < p_n <= 1` tending to `(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ParameterSchedule {
    /// `p_n = 1`, `q_n = n / (n + 1)`.
    #[default]
    QOverNPlusOne,
    /// `p_n = 1 - alpha / n`, `q_n = 1 - beta / n` with `0 <= alpha < beta`.
    Harmonic { alpha: f64, beta: f64 },
}

impl ParameterSchedule {
    pub fn harmonic(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta > alpha && beta.is_finite()) {
            return Err(domain(format!(
                "harmonic schedule needs 0 <= alpha < beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(ParameterSchedule::Harmonic { alpha, beta })
    }

    pub fn pair(&self, n: u32) -> Result<PQPair> {
        if n < 1 {
            return Err(domain("schedules start at n = 1"));
        }
        let nf = n as f64;
        match *self {
            ParameterSchedule::QOverNPlusOne => PQPair::new(1.0, nf / (nf + 1.0)),
            ParameterSchedule::Harmonic { alpha, beta } => {
                if nf <= beta {
                    return Err(domain(format!("harmonic schedule needs n > beta = {beta}, got n = {n}")));
                }
                PQPair::new(1.0 - alpha / nf, 1.0 - beta / nf)
            }
        }
    }

    /// `(lim p_n^n, lim q_n^n)`.
    pub fn limits(&self) -> (f64, f64) {
        match *self {
            ParameterSchedule::QOverNPlusOne => (1.0, (-1.0f64).exp()),
            ParameterSchedule::Harmonic { alpha, beta } => ((-alpha).exp(), (-beta).exp()),
        }
    }
}

/// Where the pair for a given `n` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParameterSource {
    Fixed(PQPair),
    Schedule(ParameterSchedule),
}

impl ParameterSource {
    pub fn pair(&self, n: u32) -> Result<PQPair> {
        match self {
            ParameterSource::Fixed(pair) => Ok(*pair),
            ParameterSource::Schedule(s) => s.pair(n),
        }
    }
}

/// A modulus value and whether the grid was too coarse for `delta`
/// (fewer than 20 grid steps per `delta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub value: f64,
    pub resolution_limited: bool,
}

const STEPS_PER_DELTA: usize = 20;

/// Running maxima of first or second differences by step count, so that
/// many `delta` values can be answered from one table.
struct ModulusTable {
    grid: EvalGrid,
    values: Vec<f64>,
    /// `best[s]` = sup over steps `1..=s` (`best[0] = 0`).
    best: Vec<f64>,
    order: u8,
}

impl ModulusTable {
    fn new(f: &FunctionSpec, grid: EvalGrid, order: u8) -> Result<Self> {
        let values = grid.to_vec().into_iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>()?;
        let n = values.len();
        let max_step = (n - 1) / order as usize;
        let mut best = vec![0.0f64; max_step + 1];
        for s in 1..=max_step {
            let mut m = best[s - 1];
            for i in 0..n - order as usize * s {
                let d = if order == 1 {
                    values[i + s] - values[i]
                } else {
                    values[i + 2 * s] - 2.0 * values[i + s] + values[i]
                };
                m = m.max(d.abs());
            }
            best[s] = m;
        }
        Ok(ModulusTable { grid, values, best, order })
    }

    fn steps(&self, delta: f64) -> usize {
        ((delta / self.grid.spacing()) + 1e-9).floor() as usize
    }

    fn query(&self, f: &FunctionSpec, delta: f64) -> Result<Modulus> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(domain(format!("modulus needs delta > 0, got {delta}")));
        }
        let s = self.steps(delta);
        if s == 0 {
            // Below the grid spacing: step by delta itself from each grid point.
            let mut m: f64 = 0.0;
            let reach = self.order as f64 * delta;
            for (i, &v) in self.values.iter().enumerate() {
                let x = self.grid.point(i);
                if x + reach > self.grid.stop() {
                    break;
                }
                let d = if self.order == 1 {
                    f.eval(x + delta)? - v
                } else {
                    f.eval(x + 2.0 * delta)? - 2.0 * f.eval(x + delta)? + v
                };
                m = m.max(d.abs());
            }
            return Ok(Modulus { value: m, resolution_limited: true });
        }
        let s_cap = s.min(self.best.len() - 1);
        Ok(Modulus {
            value: self.best[s_cap],
            resolution_limited: s < STEPS_PER_DELTA,
        })
    }
}

/// `ω(f, δ) = sup_{0 < h <= δ} sup_x |f(x + h) - f(x)|` over the grid.
pub fn modulus_of_continuity(f: &FunctionSpec, delta: f64, grid: &EvalGrid) -> Result<Modulus> {
    ModulusTable::new(f, *grid, 1)?.query(f, delta)
}

/// `ω_2(f, δ) = sup_{0 < h <= δ} sup_x |f(x + 2h) - 2 f(x + h) + f(x)|` over the grid.
pub fn second_modulus(f: &FunctionSpec, delta: f64, grid: &EvalGrid) -> Result<Modulus> {
    ModulusTable::new(f, *grid, 2)?.query(f, delta)
}

/// Computable ingredients of the local estimate
/// `|D_n(f, x) - f(x)| <= C ω_2(f, sqrt(μ_2 + μ_1^2)) + ω(f, |μ_1|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBoundTerms {
    /// `ω(f, |μ_{n,1}(x)|)`.
    pub omega_term: f64,
    /// `sqrt(μ_{n,2}(x) + μ_{n,1}(x)^2)`.
    pub omega2_arg: f64,
    pub resolution_limited: bool,
}

pub fn local_bound_terms(pair: &PQPair, n: u32, x: f64, f: &FunctionSpec, grid: &EvalGrid) -> Result<LocalBoundTerms> {
    pair.require_operator_regime()?;
    let mu1 = central_moment(pair, 1, n, x)?;
    let mu2 = central_moment(pair, 2, n, x)?;
    let (omega_term, resolution_limited) = if mu1 == 0.0 {
        (0.0, false)
    } else {
        let m = modulus_of_continuity(f, mu1.abs(), grid)?;
        (m.value, m.resolution_limited)
    };
    Ok(LocalBoundTerms {
        omega_term,
        omega2_arg: (mu2 + mu1 * mu1).sqrt(),
        resolution_limited,
    })
}

/// Value of the uniform bound on `[0, κ]` and where it peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub value: f64,
    pub argmax: f64,
    /// `L = 6 C_f (1 + κ^2)(1 + κ + κ^2)`.
    pub l_constant: f64,
    pub resolution_limited: bool,
}

/// `max_{x in [0, κ]} L μ_{n,2}(x) + ω_{κ+1}(f, δ) (1 + sqrt(μ_{n,2}(x)) / δ)`
/// with `δ = sqrt(L μ_{n,2}(x))`. The grid points in `[0, κ]` are the
/// candidate `x`; the modulus is taken on `[0, κ + 1]` at the same spacing.
pub fn rate_bound(pair: &PQPair, n: u32, f: &FunctionSpec, kappa: f64, grid: &EvalGrid) -> Result<RateBound> {
    let c_f = f
        .growth_bound()
        .ok_or_else(|| Error::Config(format!("the rate bound needs a growth bound C_f for {f}")))?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(domain(format!("kappa must be positive, got {kappa}")));
    }
    pair.require_operator_regime()?;
    let l = 6.0 * c_f * (1.0 + kappa * kappa) * (1.0 + kappa + kappa * kappa);
    let points = ((kappa + 1.0) / grid.spacing()).ceil() as usize + 1;
    let table = ModulusTable::new(f, EvalGrid::new(0.0, kappa + 1.0, points.max(2))?, 1)?;
    let mut best = RateBound {
        value: f64::NEG_INFINITY,
        argmax: 0.0,
        l_constant: l,
        resolution_limited: false,
    };
    for x in grid.to_vec().into_iter().filter(|&x| x <= kappa) {
        let mu2 = central_moment(pair, 2, n, x)?;
        let delta = (l * mu2).sqrt();
        let value = if delta > 0.0 {
            let omega = table.query(f, delta)?;
            best.resolution_limited |= omega.resolution_limited;
            l * mu2 + omega.value * (1.0 + mu2.sqrt() / delta)
        } else {
            0.0
        };
        if value > best.value {
            best.value = value;
            best.argmax = x;
        }
    }
    if best.value == f64::NEG_INFINITY {
        return Err(domain(format!("no grid point lies in [0, {kappa}]")));
    }
    Ok(best)
}

/// Measured errors of `D_n f` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridError {
    /// `max |D_n(f, x) - f(x)|`.
    pub sup_error: f64,
    /// `max |D_n(f, x) - f(x)| / σ(x)`.
    pub weighted_error: f64,
    /// Where the weighted error peaks.
    pub argmax: f64,
    /// The weighted error decreases over the last grid step.
    pub right_edge_decreasing: bool,
    /// Every operator value was trusted.
    pub trusted: bool,
}

pub fn grid_error(pair: &PQPair, n: u32, f: &FunctionSpec, grid: &EvalGrid, policy: &TruncationPolicy) -> Result<GridError> {
    let xs = grid.to_vec();
    let values = baskakov_beta_apply_grid(pair, f, n, &xs, policy, InnerIntegration::Auto)?;
    let sigma = WeightFunction;
    let mut out = GridError {
        sup_error: 0.0,
        weighted_error: 0.0,
        argmax: xs[0],
        right_edge_decreasing: false,
        trusted: true,
    };
    let mut weighted = Vec::with_capacity(xs.len());
    for (r, &x) in values.iter().zip(&xs) {
        let err = (r.value - f.eval(x)?).abs();
        out.trusted &= r.trusted;
        out.sup_error = out.sup_error.max(err);
        let w = err / sigma.eval(x);
        if w > out.weighted_error {
            out.weighted_error = w;
            out.argmax = x;
        }
        weighted.push(w);
    }
    let k = weighted.len();
    out.right_edge_decreasing = weighted[k - 1] < weighted[k - 2];
    Ok(out)
}

/// `sup_x |D_n(f, x) - f(x)| / (1 + x^2)` over the grid.
pub fn weighted_sup_error(pair: &PQPair, n: u32, f: &FunctionSpec, grid: &EvalGrid, policy: &TruncationPolicy) -> Result<GridError> {
    grid_error(pair, n, f, grid, policy)
}

/// One row of a convergence run. Failed rows carry the reason and `NaN`s.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub sup_error: f64,
    pub weighted_error: f64,
    pub mu2_max: f64,
    pub trusted: bool,
    pub failure: Option<String>,
}

impl ConvergenceRow {
    fn failed(n: u32, pair: Option<PQPair>, err: Error) -> Self {
        ConvergenceRow {
            n,
            p: pair.map_or(f64::NAN, |p| p.p()),
            q: pair.map_or(f64::NAN, |p| p.q()),
            sup_error: f64::NAN,
            weighted_error: f64::NAN,
            mu2_max: f64::NAN,
            trusted: false,
            failure: Some(err.to_string()),
        }
    }
}

fn convergence_row(source: &ParameterSource, f: &FunctionSpec, n: u32, grid: &EvalGrid, policy: &TruncationPolicy) -> ConvergenceRow {
    let pair = match source.pair(n) {
        Ok(p) => p,
        Err(e) => return ConvergenceRow::failed(n, None, e),
    };
    let measured = grid_error(&pair, n, f, grid, policy).and_then(|err| {
        let mu2_max = grid
            .to_vec()
            .into_iter()
            .map(|x| central_moment(&pair, 2, n, x))
            .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))?;
        Ok((err, mu2_max))
    });
    match measured {
        Ok((err, mu2_max)) => ConvergenceRow {
            n,
            p: pair.p(),
            q: pair.q(),
            sup_error: err.sup_error,
            weighted_error: err.weighted_error,
            mu2_max,
            trusted: err.trusted,
            failure: None,
        },
        Err(e) => ConvergenceRow::failed(n, Some(pair), e),
    }
}

/// One row per `n`, in `n_list` order. Rows run on separate threads; a failed
/// row is marked and does not stop the others.
pub fn convergence_run(
    source: &ParameterSource,
    f: &FunctionSpec,
    n_list: &[u32],
    grid: &EvalGrid,
    policy: &TruncationPolicy,
) -> Vec<ConvergenceRow> {
    thread::scope(|scope| {
        let handles: Vec<_> = n_list
            .iter()
            .map(|&n| scope.spawn(move || convergence_row(source, f, n, grid, policy)))
            .collect();
        handles
            .into_iter()
            .zip(n_list)
            .map(|(h, &n)| {
                h.join()
                    .unwrap_or_else(|_| ConvergenceRow::failed(n, None, domain("row evaluation panicked")))
            })
            .collect()
    })
}
