//! Generalized Jackson (p,q)-integration.
//!
//! On `[0, a]` the integral is the node series
//! `(p - q) a Σ_{i>=0} (q^i / p^{i+1}) f(a q^i / p^{i+1})`. On `[0, inf)` the
//! same series with `a = 1` runs over all integer `i`; nodes tend to `0` as
//! `i -> +inf` and to `inf` as `i -> -inf`.
//!
//! Each direction of a series stops once three consecutive terms, and the
//! geometric extrapolation of the tail from the observed term ratio, fall
//! below `max(abs_tol, rel_tol * |partial sum|)`.

use crate::calculus::{pq_derivative_with, PQPair, TruncationPolicy};
use crate::error::{domain, Result};
use crate::function::FunctionSpec;

/// Outcome of a truncated node series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub terms_used: usize,
    /// Estimated magnitude of the discarded terms.
    pub tail_estimate: f64,
    pub converged: bool,
    /// Nodes that fell outside `(0, a)`; always 0 for improper integrals.
    pub nodes_outside: usize,
}

/// Running sum of `factor * exp(ln_weight)` kept relative to the largest
/// weight seen so far, with Neumaier compensation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledSum {
    scale: f64,
    sum: f64,
    comp: f64,
}

impl Default for ScaledSum {
    fn default() -> Self {
        ScaledSum {
            scale: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }
}

impl ScaledSum {
    pub(crate) fn add(&mut self, ln_weight: f64, factor: f64) {
        if factor == 0.0 || ln_weight == f64::NEG_INFINITY {
            return;
        }
        if ln_weight > self.scale {
            let shrink = (self.scale - ln_weight).exp();
            self.sum *= shrink;
            self.comp *= shrink;
            self.scale = ln_weight;
        }
        let term = factor * (ln_weight - self.scale).exp();
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn mantissa(&self) -> f64 {
        self.sum + self.comp
    }

    pub(crate) fn ln_abs(&self) -> f64 {
        if self.scale == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.scale + self.mantissa().abs().ln()
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.scale == f64::NEG_INFINITY {
            0.0
        } else {
            self.mantissa() * self.scale.exp()
        }
    }

    /// `self / other`, computed without leaving the scaled representation.
    pub(crate) fn ratio(&self, other: &ScaledSum) -> f64 {
        if self.scale == f64::NEG_INFINITY {
            return 0.0;
        }
        self.mantissa() / other.mantissa() * (self.scale - other.scale).exp()
    }
}

/// One summand handed to [`sum_direction`]: `factor * exp(ln_weight)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub ln_weight: f64,
    pub factor: f64,
}

impl Term {
    fn ln_abs(&self) -> f64 {
        if self.factor == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.ln_weight + self.factor.abs().ln()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Tracker {
    prev_ln: Option<f64>,
    small_run: u32,
    tail_ln: f64,
}

impl Default for Tracker {
    fn default() -> Self {
        Tracker {
            prev_ln: None,
            small_run: 0,
            tail_ln: f64::INFINITY,
        }
    }
}

impl Tracker {
    fn observe(&mut self, term_ln: f64, threshold_ln: f64) {
        let ratio_ln = match self.prev_ln {
            Some(prev) if prev > f64::NEG_INFINITY => term_ln - prev,
            Some(_) if term_ln == f64::NEG_INFINITY => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        self.tail_ln = if term_ln == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if ratio_ln < 0.0 {
            // |t| rho / (1 - rho)
            term_ln + ratio_ln - (-ratio_ln.exp()).ln_1p()
        } else {
            f64::INFINITY
        };
        if term_ln <= threshold_ln && self.tail_ln <= threshold_ln {
            self.small_run += 1;
        } else {
            self.small_run = 0;
        }
        self.prev_ln = Some(term_ln);
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DirectionOutcome<const K: usize> {
    pub terms: usize,
    pub stopped: bool,
    pub tail_ln: [f64; K],
}

const SMALL_RUN: u32 = 3;

/// Sums `K` parallel series over `indices` until every one of them satisfies
/// the stopping rule, or `budget` terms have been consumed.
pub(crate) fn sum_direction<const K: usize, I, F>(
    policy: &TruncationPolicy,
    budget: usize,
    indices: I,
    sums: &mut [ScaledSum; K],
    mut term: F,
) -> Result<DirectionOutcome<K>>
where
    I: Iterator<Item = i64>,
    F: FnMut(i64) -> Result<[Term; K]>,
{
    let mut trackers = [Tracker::default(); K];
    let ln_abs_tol = policy.abs_tol.ln();
    let ln_rel_tol = policy.rel_tol.ln();
    let mut terms = 0;
    for i in indices {
        if terms >= budget {
            break;
        }
        let ts = term(i)?;
        terms += 1;
        let mut all_small = true;
        for ((t, s), tr) in ts.iter().zip(sums.iter_mut()).zip(trackers.iter_mut()) {
            s.add(t.ln_weight, t.factor);
            let threshold = ln_abs_tol.max(ln_rel_tol + s.ln_abs());
            tr.observe(t.ln_abs(), threshold);
            all_small &= tr.small_run >= SMALL_RUN;
        }
        if all_small {
            return Ok(DirectionOutcome {
                terms,
                stopped: true,
                tail_ln: trackers.map(|t| t.tail_ln),
            });
        }
    }
    Ok(DirectionOutcome {
        terms,
        stopped: false,
        tail_ln: trackers.map(|t| t.tail_ln),
    })
}

/// Node `q^i / p^{i+1}` of the unit lattice and its logarithm.
pub(crate) fn lattice_node(pair: &PQPair, i: i64) -> (f64, f64) {
    let ln_node = i as f64 * pair.q().ln() - (i + 1) as f64 * pair.p().ln();
    let node = if i.abs() < 256 {
        pair.q().powi(i as i32) / pair.p().powi(i as i32 + 1)
    } else {
        ln_node.exp()
    };
    (node, ln_node)
}

/// `directions` is the number of independently truncated series whose tails
/// were added into `tail_ln`; each was held to the threshold on its own.
fn finish(sum: &ScaledSum, terms: usize, stopped: bool, tail_ln: f64, directions: f64, policy: &TruncationPolicy) -> QuadratureResult {
    let value = sum.value();
    let tail_estimate = tail_ln.exp();
    let converged = stopped
        && terms < policy.max_terms
        && tail_estimate <= directions * policy.threshold(value);
    QuadratureResult {
        value,
        terms_used: terms,
        tail_estimate,
        converged,
        nodes_outside: 0,
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Jackson integral `∫_0^a f d_{p,q}x` of a closure.
pub fn jackson_integral_with<F>(pair: &PQPair, a: f64, policy: &TruncationPolicy, mut f: F) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    pair.require_strict("quadrature")?;
    policy.validate()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("Jackson integral needs a > 0, got {a}")));
    }
    let ln_prefix = (pair.p() - pair.q()).ln() + a.ln();
    let mut outside = 0;
    let mut sums = [ScaledSum::default()];
    let out = sum_direction(policy, policy.max_terms, 0i64.., &mut sums, |i| {
        let (w, ln_w) = lattice_node(pair, i);
        let node = a * w;
        if node > a {
            outside += 1;
        }
        Ok([Term {
            ln_weight: ln_prefix + ln_w,
            factor: f(node)?,
        }])
    })?;
    let mut res = finish(&sums[0], out.terms, out.stopped, out.tail_ln[0], 1.0, policy);
    res.nodes_outside = outside;
    Ok(res)
}

/// Jackson integral `∫_0^a f d_{p,q}x`; needs `q < p`.
pub fn jackson_integral(pair: &PQPair, f: &FunctionSpec, a: f64, policy: &TruncationPolicy) -> Result<QuadratureResult> {
    jackson_integral_with(pair, a, policy, |t| f.eval(t))
}

/// The first `count` nodes `a q^i / p^{i+1}` of the Jackson integral on `[0, a]`.
pub fn jackson_nodes(pair: &PQPair, a: f64, count: usize) -> Vec<f64> {
    (0..count as i64).map(|i| a * lattice_node(pair, i).0).collect()
}

/// Improper integral over `[0, inf)` of an integrand given in log form:
/// `ln_g(t, ln t)` returns `(ln |magnitude|, signed factor)` with
/// `g(t) = factor * exp(magnitude)`.
pub(crate) fn improper_integral_parts<const K: usize, F>(
    pair: &PQPair,
    policy: &TruncationPolicy,
    mut g: F,
) -> Result<([ScaledSum; K], [QuadratureResult; K])>
where
    F: FnMut(i64, f64, f64) -> Result<[Term; K]>,
{
    pair.require_strict("quadrature")?;
    policy.validate()?;
    let ln_pq = (pair.p() - pair.q()).ln();
    let mut sums = [ScaledSum::default(); K];
    let mut node_term = |i: i64| -> Result<[Term; K]> {
        let (t, ln_t) = lattice_node(pair, i);
        let mut parts = g(i, t, ln_t)?;
        for part in parts.iter_mut() {
            part.ln_weight += ln_pq + ln_t;
        }
        Ok(parts)
    };
    let toward_zero = sum_direction(policy, policy.max_terms, 0i64.., &mut sums, &mut node_term)?;
    let remaining = policy.max_terms.saturating_sub(toward_zero.terms);
    let toward_inf = sum_direction(policy, remaining, (1i64..).map(|j| -j), &mut sums, &mut node_term)?;
    let terms = toward_zero.terms + toward_inf.terms;
    let stopped = toward_zero.stopped && toward_inf.stopped;
    let mut results = [QuadratureResult {
        value: 0.0,
        terms_used: 0,
        tail_estimate: 0.0,
        converged: false,
        nodes_outside: 0,
    }; K];
    for (k, res) in results.iter_mut().enumerate() {
        let tail_ln = ln_add(toward_zero.tail_ln[k], toward_inf.tail_ln[k]);
        *res = finish(&sums[k], terms, stopped, tail_ln, 2.0, policy);
    }
    Ok((sums, results))
}

/// `∫_0^inf f d_{p,q}t` as the bilateral node series, for a closure.
pub fn improper_integral_with<F>(pair: &PQPair, policy: &TruncationPolicy, mut f: F) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (_, [res]) = improper_integral_parts(pair, policy, |_, t, _| {
        Ok([Term {
            ln_weight: 0.0,
            factor: f(t)?,
        }])
    })?;
    Ok(res)
}

/// `∫_0^inf f d_{p,q}t`; needs `q < p` and an integrand that decays at both
/// ends of the lattice, otherwise the result comes back unconverged.
pub fn improper_integral(pair: &PQPair, f: &FunctionSpec, policy: &TruncationPolicy) -> Result<QuadratureResult> {
    improper_integral_with(pair, policy, |t| f.eval(t))
}

/// Prefix sums `ln (1 ⊕ pt)^N` for `N = 0, 1, ...` at one node `t`.
#[derive(Debug, Clone)]
pub(crate) struct PowerBasisPrefix {
    t: f64,
    prefix: Vec<f64>,
}

impl PowerBasisPrefix {
    pub(crate) fn new(t: f64) -> Self {
        PowerBasisPrefix { t, prefix: vec![0.0] }
    }

    /// `ln (1 ⊕ pt)^n_{p,q} = Σ_{j<n} ln(p^j + p q^j t)`.
    pub(crate) fn ln_power(&mut self, pair: &PQPair, n: usize) -> f64 {
        while self.prefix.len() <= n {
            let j = (self.prefix.len() - 1) as i32;
            let factor = pair.p().powi(j) + pair.p() * pair.q().powi(j) * self.t;
            let last = *self.prefix.last().unwrap_or(&0.0);
            self.prefix.push(last + factor.ln());
        }
        self.prefix[n]
    }
}

/// Numerical (p,q)-Beta function of the second kind,
/// `∫_0^inf t^{m-1} / (1 ⊕ pt)^{m+n} d_{p,q}t`, by the bilateral node series.
pub fn beta_integral(pair: &PQPair, m: u32, n: u32, policy: &TruncationPolicy) -> Result<QuadratureResult> {
    if m < 1 || n < 1 {
        return Err(domain(format!(
            "the (p,q)-Beta integral needs m >= 1 and n >= 1, got m = {m}, n = {n}"
        )));
    }
    let total = (m + n) as usize;
    let (_, [res]) = improper_integral_parts(pair, policy, |_, t, ln_t| {
        let mut basis = PowerBasisPrefix::new(t);
        Ok([Term {
            ln_weight: (m - 1) as f64 * ln_t - basis.ln_power(pair, total),
            factor: 1.0,
        }])
    })?;
    Ok(res)
}

/// Residual of the (p,q)-integration-by-parts identity
/// `∫_a^b f(px) D g(x) dx = f(b)g(b) - f(a)g(a) - ∫_a^b g(qx) D f(x) dx`,
/// with `∫_a^b = ∫_0^b - ∫_0^a`.
pub fn verify_integration_by_parts(
    pair: &PQPair,
    f: &FunctionSpec,
    g: &FunctionSpec,
    a: f64,
    b: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if !(a >= 0.0 && b > a) {
        return Err(domain(format!("integration by parts needs 0 <= a < b, got a = {a}, b = {b}")));
    }
    let lhs_integrand = |x: f64| -> Result<f64> {
        let dg = pq_derivative_with(pair, x, |t| g.eval(t))?;
        Ok(f.eval(pair.p() * x)? * dg)
    };
    let rhs_integrand = |x: f64| -> Result<f64> {
        let df = pq_derivative_with(pair, x, |t| f.eval(t))?;
        Ok(g.eval(pair.q() * x)? * df)
    };
    let over = |h: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let upper = jackson_integral_with(pair, b, policy, h)?.value;
        let lower = if a > 0.0 {
            jackson_integral_with(pair, a, policy, h)?.value
        } else {
            0.0
        };
        Ok(upper - lower)
    };
    let lhs = over(&lhs_integrand)?;
    let boundary = f.eval(b)? * g.eval(b)? - f.eval(a)? * g.eval(a)?;
    let rhs = boundary - over(&rhs_integrand)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{pq_beta, pq_number, pq_power_basis};
    use crate::error::Error;

    fn pair(p: f64, q: f64) -> PQPair {
        PQPair::new(p, q).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn scaled_sum_handles_huge_and_tiny_weights() {
        let mut s = ScaledSum::default();
        s.add(700.0, 1.0);
        s.add(701.0, -0.5);
        s.add(-50.0, 3.0);
        let mut t = ScaledSum::default();
        t.add(699.0, 2.0);
        let expect = (1.0 - 0.5 * 1f64.exp()) / (2.0 * (-1f64).exp());
        assert!(rel(s.ratio(&t), expect) < 1e-14);
        assert_eq!(ScaledSum::default().value(), 0.0);
    }

    #[test]
    fn jackson_examples() {
        let pr = pair(0.9, 0.8);
        let policy = TruncationPolicy::default();
        let one = jackson_integral(&pr, &FunctionSpec::constant(1.0), 3.0, &policy).unwrap();
        assert!(one.converged);
        assert!(rel(one.value, 3.0) < 1e-12);
        let x = jackson_integral(&pr, &FunctionSpec::monomial(1), 1.0, &policy).unwrap();
        assert!(rel(x.value, 1.0 / 1.7) < 1e-12);
    }

    #[test]
    fn jackson_monomial_identity() {
        let policy = TruncationPolicy::default();
        for &(p, q) in &[(0.9, 0.8), (0.95, 0.9), (1.0, 0.9), (0.6, 0.2)] {
            let pr = pair(p, q);
            for n in 0..=10u32 {
                for &a in &[0.5, 1.0, 2.0] {
                    let res = jackson_integral(&pr, &FunctionSpec::monomial(n), a, &policy).unwrap();
                    let expect = a.powi(n as i32 + 1) / pq_number(&pr, n + 1);
                    assert!(res.converged, "p={p} q={q} n={n} a={a}");
                    assert!(rel(res.value, expect) < 1e-10, "p={p} q={q} n={n} a={a}");
                }
            }
        }
    }

    #[test]
    fn jackson_counts_nodes_outside_interval() {
        // first node a/p lies beyond a whenever p < 1
        let res = jackson_integral(&pair(0.9, 0.8), &FunctionSpec::constant(1.0), 1.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(res.nodes_outside, 1);
        let res = jackson_integral(&pair(1.0, 0.8), &FunctionSpec::constant(1.0), 1.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(res.nodes_outside, 0); // q^i > p^{i+1} never holds for p = 1
        let nodes = jackson_nodes(&pair(0.9, 0.8), 1.0, 3);
        assert!(rel(nodes[2], 0.64 / 0.729) < 1e-15);
    }

    #[test]
    fn jackson_rejects_degenerate_pairs() {
        let f = FunctionSpec::constant(1.0);
        let policy = TruncationPolicy::default();
        assert!(matches!(
            jackson_integral(&pair(0.9, 0.9), &f, 1.0, &policy),
            Err(Error::InvalidPair { .. })
        ));
        assert!(jackson_integral(&PQPair::classical(), &f, 1.0, &policy).is_err());
        assert!(jackson_integral(&pair(0.9, 0.8), &f, 0.0, &policy).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let policy = TruncationPolicy::new(1e-12, 1e-14, 50).unwrap();
        let res = jackson_integral(&pair(1.0, 0.99), &FunctionSpec::constant(1.0), 1.0, &policy).unwrap();
        assert!(!res.converged);
        assert_eq!(res.terms_used, 50);
        // polynomial growth never decays towards infinity
        let res = improper_integral(&pair(0.9, 0.8), &FunctionSpec::monomial(1), &TruncationPolicy::default()).unwrap();
        assert!(!res.converged);
    }

    #[test]
    fn improper_beta_integrand_closure_matches_beta_integral() {
        let pr = pair(0.9, 0.8);
        let policy = TruncationPolicy::default();
        let via_closure = improper_integral_with(&pr, &policy, |t| Ok(t / pq_power_basis(&pr, 0.9 * t, 4))).unwrap();
        let dedicated = beta_integral(&pr, 2, 2, &policy).unwrap();
        assert!(via_closure.converged && dedicated.converged);
        assert!(rel(via_closure.value, dedicated.value) < 1e-12);
    }

    // The bilateral series carries a factor q^{-1} p^{m(m-1)/2 - n(n-1)/2}
    // relative to the closed-form Beta relation. Frozen from a 40-digit
    // evaluation of the same series.
    #[test]
    fn bilateral_beta_versus_closed_form() {
        let policy = TruncationPolicy::new(1e-14, 1e-16, 10_000).unwrap();
        let frozen = [
            ((0.9, 0.8, 1, 2), 0.726216412490922),
            ((0.9, 0.8, 2, 1), 0.907770515613653),
            ((0.9, 0.8, 6, 6), 23.4620498670534),
            ((1.0, 0.9, 3, 4), 0.0394970901479823),
            ((0.95, 0.9, 2, 2), 0.272837771753545),
        ];
        for ((p, q, m, n), value) in frozen {
            let res = beta_integral(&pair(p, q), m, n, &policy).unwrap();
            assert!(res.converged);
            assert!(rel(res.value, value) < 1e-12, "{p} {q} {m} {n}: {}", res.value);
        }
        for &(p, q) in &[(0.9, 0.8), (0.95, 0.9), (1.0, 0.9)] {
            let pr = pair(p, q);
            for m in 1..=6u32 {
                for n in 1..=6u32 {
                    let numeric = beta_integral(&pr, m, n, &policy).unwrap().value;
                    let (mf, nf) = (m as f64, n as f64);
                    let factor = p.powf(mf * (mf - 1.0) / 2.0 - nf * (nf - 1.0) / 2.0) / q;
                    let closed = pq_beta(&pr, m, n).unwrap();
                    assert!(rel(numeric, factor * closed) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn integration_by_parts_examples() {
        let policy = TruncationPolicy::default();
        let poly = FunctionSpec::polynomial(vec![1.0, -2.0, 0.5, 0.25]).unwrap();
        let r = verify_integration_by_parts(&pair(0.9, 0.8), &FunctionSpec::constant(1.0), &poly, 0.5, 2.0, &policy).unwrap();
        assert!(r <= 1e-9);
        let t = FunctionSpec::monomial(1);
        let r = verify_integration_by_parts(&pair(0.9, 0.8), &t, &t, 0.5, 2.0, &policy).unwrap();
        assert!(r <= 1e-8);
        let r = verify_integration_by_parts(
            &pair(0.95, 0.9),
            &FunctionSpec::monomial(2),
            &FunctionSpec::monomial(3),
            1.0,
            3.0,
            &policy,
        )
        .unwrap();
        assert!(r <= 1e-8);
        let r = verify_integration_by_parts(&pair(0.9, 0.8), &t, &FunctionSpec::named(crate::NamedFunction::Sin), 0.0, 2.0, &policy).unwrap();
        assert!(r <= 1e-9);
        assert!(verify_integration_by_parts(&pair(0.9, 0.8), &t, &t, 2.0, 1.0, &policy).is_err());
    }

    #[test]
    fn refinement_stability() {
        let pr = pair(0.95, 0.9);
        let f = FunctionSpec::named(crate::NamedFunction::Cos);
        let coarse = TruncationPolicy::new(1e-6, 1e-14, 10_000).unwrap();
        let fine = TruncationPolicy::new(0.5e-6, 1e-14, 10_000).unwrap();
        let a = jackson_integral(&pr, &f, 2.0, &coarse).unwrap();
        let b = jackson_integral(&pr, &f, 2.0, &fine).unwrap();
        assert!((a.value - b.value).abs() <= a.tail_estimate.max(1e-16));
    }
}
