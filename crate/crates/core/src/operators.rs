//! The (p,q)-Baskakov basis and operator, the (p,q)-Baskakov-Beta operator,
//! and their moments.
//!
//! The basis `b_{n,k}(x)` is a probability distribution over `k`. Outer sums
//! stop past the mode once the geometric bound on the remaining mass drops to
//! `1e-3 * rel_tol`; the result is trusted when the accumulated mass is
//! within `10 * rel_tol` of 1.
//!
//! The Baskakov-Beta operator has two inner-integral routes:
//!
//! * **Beta expansion** (polynomial `f`): the inner integral of
//!   `t^k (q^2 p^{n+k} t)^m` against the Beta kernel is
//!   `q^{2m} p^{m(n+k)} B(k+m+1, n-m)`, evaluated with the closed-form Beta.
//! * **Quadrature** (any `f`): the bilateral Jackson series of the kernel
//!   times `f`, divided by the same series for the kernel alone.
//!
//! For `p < 1` the two routes do not agree on moments of order >= 1, because
//! the bilateral series of the Beta kernel differs from the closed-form Beta
//! by the factor `q^{-1} p^{m(m-1)/2 - n(n-1)/2}`. The factor is constant in
//! `m, n` when `p = 1`, so it cancels there.

use crate::calculus::{
    ln_pq_beta, ln_pq_binomial, ln_pq_number, ln_pq_power_basis, pq_number, PQPair, TruncationPolicy,
};
use crate::error::{domain, Result};
use crate::function::FunctionSpec;
use crate::quadrature::{improper_integral_parts, lattice_node, PowerBasisPrefix, ScaledSum, Term};

/// Value of an operator at one point with truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorResult {
    pub value: f64,
    pub k_terms_used: usize,
    /// `1 - Σ_{k<K} b_{n,k}(x)`, clamped to `[0, 1]`.
    pub basis_tail_mass: f64,
    pub inner_integrals_converged: bool,
    /// Inner integrals converged and the basis tail is within tolerance.
    pub trusted: bool,
}

/// How the inner integrals of the Baskakov-Beta operator are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerIntegration {
    /// Beta expansion for polynomials, quadrature otherwise.
    #[default]
    Auto,
    BetaExpansion,
    Quadrature,
}

/// `b_{n,k}(x) = [n+k-1 choose k] p^{k + n(n-1)/2} q^{k(k-1)/2} x^k / (1 ⊕ x)^{n+k}`.
pub fn baskakov_basis(pair: &PQPair, n: u32, k: u32, x: f64) -> Result<f64> {
    Ok(ln_baskakov_basis(pair, n, k, x)?.exp())
}

pub fn ln_baskakov_basis(pair: &PQPair, n: u32, k: u32, x: f64) -> Result<f64> {
    check_basis_args(pair, n, x)?;
    if x == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let (kf, nf) = (k as f64, n as f64);
    Ok(ln_pq_binomial(pair, n + k - 1, k)?
        + (kf + nf * (nf - 1.0) / 2.0) * pair.p().ln()
        + kf * (kf - 1.0) / 2.0 * pair.q().ln()
        + kf * x.ln()
        - ln_pq_power_basis(pair, x, n + k))
}

fn check_basis_args(pair: &PQPair, n: u32, x: f64) -> Result<()> {
    pair.require_operator_regime()?;
    if n < 1 {
        return Err(domain("the Baskakov basis needs n >= 1"));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("the Baskakov basis needs finite x >= 0, got {x}")));
    }
    Ok(())
}

/// Walks `ln b_{n,k}(x)` for `k = 0, 1, ...` with the term-ratio recurrence
/// `b_{k+1}/b_k = [n+k]/[k+1] · p q^k x / (p^{n+k} + q^{n+k} x)`.
#[derive(Debug, Clone)]
pub(crate) struct BasisWalk {
    pair: PQPair,
    n: u32,
    x: f64,
    k: u32,
    ln_b: f64,
}

impl BasisWalk {
    pub(crate) fn new(pair: &PQPair, n: u32, x: f64) -> Result<Self> {
        check_basis_args(pair, n, x)?;
        // b_0 = Π_{j<n} p^j / (p^j + q^j x) = Π 1 / (1 + (q/p)^j x)
        let r = pair.q() / pair.p();
        let ln_b = -(0..n).map(|j| (r.powi(j as i32) * x).ln_1p()).sum::<f64>();
        Ok(BasisWalk {
            pair: *pair,
            n,
            x,
            k: 0,
            ln_b,
        })
    }

    pub(crate) fn k(&self) -> u32 {
        self.k
    }

    pub(crate) fn ln_b(&self) -> f64 {
        self.ln_b
    }

    pub(crate) fn advance(&mut self) {
        let (p, q, k, n) = (self.pair.p(), self.pair.q(), self.k, self.n);
        if self.x == 0.0 {
            self.ln_b = f64::NEG_INFINITY;
        } else {
            let m = (n + k) as i32;
            self.ln_b += ln_pq_number(&self.pair, n + k) - ln_pq_number(&self.pair, k + 1)
                + p.ln()
                + k as f64 * q.ln()
                + self.x.ln()
                - (p.powi(m) + q.powi(m) * self.x).ln();
        }
        self.k += 1;
    }
}

/// Truncation summary of an outer basis sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSummary {
    pub terms: usize,
    pub mass: f64,
    pub tail_mass: f64,
    /// The tail criterion fired before `max_terms`.
    pub stopped: bool,
}

/// Visits `(k, ln b_{n,k}(x))` until the remaining mass is negligible.
pub(crate) fn walk_basis<F>(pair: &PQPair, n: u32, x: f64, policy: &TruncationPolicy, mut visit: F) -> Result<BasisSummary>
where
    F: FnMut(u32, f64) -> Result<()>,
{
    policy.validate()?;
    let mut walk = BasisWalk::new(pair, n, x)?;
    let mut mass = 0.0;
    let mut comp = 0.0;
    let mut prev_ln = f64::NEG_INFINITY;
    let mut stopped = false;
    let mut terms = 0;
    while terms < policy.max_terms {
        let ln_b = walk.ln_b();
        visit(walk.k(), ln_b)?;
        terms += 1;
        let b = ln_b.exp();
        let t = mass + b;
        comp += if mass >= b { (mass - t) + b } else { (b - t) + mass };
        mass = t;
        // Past the mode, stop once this term plus its geometric tail is far
        // below the mass tolerance, so weighted tails are negligible too.
        if ln_b < prev_ln || b == 0.0 {
            let rho = (ln_b - prev_ln).exp();
            if b / (1.0 - rho) <= 1e-3 * policy.rel_tol {
                stopped = true;
                break;
            }
        }
        prev_ln = ln_b;
        walk.advance();
    }
    let mass = mass + comp;
    Ok(BasisSummary {
        terms,
        mass,
        tail_mass: (1.0 - mass).clamp(0.0, 1.0),
        stopped,
    })
}

/// `Σ_k b_{n,k}(x)` truncated by the tail rule; the partition-of-unity check.
pub fn basis_partition(pair: &PQPair, n: u32, x: f64, policy: &TruncationPolicy) -> Result<BasisSummary> {
    walk_basis(pair, n, x, policy, |_, _| Ok(()))
}

fn basis_tail_ok(summary: &BasisSummary, policy: &TruncationPolicy) -> bool {
    summary.stopped && summary.tail_mass <= 10.0 * policy.rel_tol
}

/// Node `p^{n-1} [k] / (q^{k-1} [n])` of the (p,q)-Baskakov operator.
pub fn baskakov_node(pair: &PQPair, n: u32, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ((n as f64 - 1.0) * pair.p().ln() + ln_pq_number(pair, k) - (k as f64 - 1.0) * pair.q().ln()
        - ln_pq_number(pair, n))
    .exp()
}

/// The (p,q)-Baskakov operator `Σ_k b_{n,k}(x) f(node_k)`.
pub fn baskakov_apply(pair: &PQPair, f: &FunctionSpec, n: u32, x: f64, policy: &TruncationPolicy) -> Result<OperatorResult> {
    let mut sum = ScaledSum::default();
    let summary = walk_basis(pair, n, x, policy, |k, ln_b| {
        sum.add(ln_b, f.eval(baskakov_node(pair, n, k))?);
        Ok(())
    })?;
    Ok(OperatorResult {
        value: sum.value(),
        k_terms_used: summary.terms,
        basis_tail_mass: summary.tail_mass,
        inner_integrals_converged: true,
        trusted: basis_tail_ok(&summary, policy),
    })
}

/// Closed forms of the Baskakov moments `B_{n,p,q}(e_m, x)`, `m <= 2`.
pub fn baskakov_moment_closed(pair: &PQPair, m: u32, n: u32, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(domain("Baskakov moments need n >= 1"));
    }
    let (p, q) = (pair.p(), pair.q());
    match m {
        0 => Ok(1.0),
        1 => Ok(x),
        2 => Ok((pq_number(pair, n + 1) * x * x + p.powi(n as i32 - 1) * q * x) / (q * pq_number(pair, n))),
        _ => Err(domain(format!("closed Baskakov moments exist for m in {{0, 1, 2}}, got {m}"))),
    }
}

/// Residual of the moment recurrence
/// `[n] T_{m+1}(qx) = q p^{n-1} x (1 + px) D_{p,q}[T_m](x) + [n] q x T_m(qx)`,
/// with `T_m = B_{n,p,q}(e_m, ·)` evaluated numerically.
pub fn verify_baskakov_recurrence(pair: &PQPair, n: u32, m: u32, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    pair.require_strict("recurrence")?;
    if m > 1 {
        return Err(domain(format!("the recurrence check covers m in {{0, 1}}, got {m}")));
    }
    if !(x > 0.0) {
        return Err(domain("the recurrence check needs x > 0"));
    }
    let (p, q) = (pair.p(), pair.q());
    let t_m = FunctionSpec::monomial(m);
    let t_next = FunctionSpec::monomial(m + 1);
    let moment = |f: &FunctionSpec, y: f64| baskakov_apply(pair, f, n, y, policy).map(|r| r.value);
    let d_tm = crate::calculus::pq_derivative_with(pair, x, |y| moment(&t_m, y))?;
    let nn = pq_number(pair, n);
    let lhs = nn * moment(&t_next, q * x)?;
    let rhs = q * p.powi(n as i32 - 1) * x * (1.0 + p * x) * d_tm + nn * q * x * moment(&t_m, q * x)?;
    Ok((lhs - rhs).abs())
}

/// Closed-form moments `D_n(e_m, x)` of the Baskakov-Beta operator, printed
/// form. Needs `n > 1` for `m = 1` and `n > 2` for `m = 2`.
pub fn moments_closed(pair: &PQPair, m: u32, n: u32, x: f64) -> Result<f64> {
    let (p, q) = (pair.p(), pair.q());
    let b = |j: u32| pq_number(pair, j);
    let pw = |e: i32| p.powi(e);
    let ni = n as i32;
    match m {
        0 if n >= 1 => Ok(1.0),
        1 if n > 1 => Ok((b(n) * x + pw(ni - 2) * q) / b(n - 1)),
        2 if n > 2 => {
            let den = b(n - 1) * b(n - 2);
            Ok(x * x * b(n) * (b(n) + pw(ni) / q) / (q * den)
                + x * b(n) * (pw(ni - 3) * q * q + 2.0 * pw(ni - 2) * q + pw(ni - 1)) / (q * den)
                + pw(2 * ni - 5) * q * b(2) / den)
        }
        0..=2 => Err(domain(format!(
            "moment of order {m} is defined for n > {m}, got n = {n}"
        ))),
        _ => Err(domain(format!("closed moments exist for m in {{0, 1, 2}}, got {m}"))),
    }
}

/// Central moments `μ_{n,1}(x) = D_n(t - x, x)` and `μ_{n,2}(x) = D_n((t - x)^2, x)`
/// in their printed closed forms; needs `n > 2`.
pub fn central_moment(pair: &PQPair, order: u32, n: u32, x: f64) -> Result<f64> {
    if n <= 2 {
        return Err(domain(format!("central moments are defined for n > 2, got n = {n}")));
    }
    let (p, q) = (pair.p(), pair.q());
    let b = |j: u32| pq_number(pair, j);
    let pw = |e: i32| p.powi(e);
    let ni = n as i32;
    match order {
        1 => Ok((x * (b(n) - b(n - 1)) + pw(ni - 2) * q) / b(n - 1)),
        2 => {
            let den = q * b(n - 1) * b(n - 2);
            let quad = b(n) * (b(n) + pw(ni) / q) + q * b(n - 1) * b(n - 2) - 2.0 * q * b(n) * b(n - 2);
            let lin = b(n) * (pw(ni - 3) * q * q + 2.0 * pw(ni - 2) * q + pw(ni - 1))
                - 2.0 * pw(ni - 2) * q * q * b(n - 2);
            Ok(x * x * quad / den + x * lin / den + b(2) * pw(2 * ni - 5) * q / (b(n - 1) * b(n - 2)))
        }
        _ => Err(domain(format!("central moments exist for order 1 or 2, got {order}"))),
    }
}

/// `ln [B(k+m+1, n-m) / B(k+1, n)]` with the Gamma factors telescoped.
fn ln_beta_ratio(pair: &PQPair, k: u32, m: u32, n: u32) -> f64 {
    let (lp, lq) = (pair.p().ln(), pair.q().ln());
    let pref = |a: f64| (1.0 - a * (a - 1.0) / 2.0) * lq - a * (a + 1.0) / 2.0 * lp;
    let (a1, a0) = ((k + m + 1) as f64, (k + 1) as f64);
    let up: f64 = (k + 1..=k + m).map(|j| ln_pq_number(pair, j)).sum();
    let down: f64 = (n - m..n).map(|j| ln_pq_number(pair, j)).sum();
    pref(a1) - pref(a0) + up - down
}

/// `ln` of the normalized inner integral of `e_m` at index `k`:
/// `q^{2m} p^{m(n+k)} B(k+m+1, n-m) / B(k+1, n)`.
fn ln_inner_monomial(pair: &PQPair, k: u32, m: u32, n: u32) -> f64 {
    2.0 * m as f64 * pair.q().ln() + (m * (n + k)) as f64 * pair.p().ln() + ln_beta_ratio(pair, k, m, n)
}

/// Semi-analytic `D_n(e_m, x) = Σ_k b_{n,k}(x) q^{2m} p^{m(n+k)} B(k+m+1, n-m) / B(k+1, n)`,
/// with every Beta value taken from the closed form. Independent of quadrature.
pub fn baskakov_beta_monomial_exact(pair: &PQPair, m: u32, n: u32, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    if n <= m {
        return Err(domain(format!(
            "the Beta expansion of e_{m} needs n > {m}, got n = {n}"
        )));
    }
    pair.require_operator_regime()?;
    let (lp, lq) = (pair.p().ln(), pair.q().ln());
    let mut sum = ScaledSum::default();
    walk_basis(pair, n, x, policy, |k, ln_b| {
        let ln_inner = 2.0 * m as f64 * lq + (m * (n + k)) as f64 * lp + ln_pq_beta(pair, k + m + 1, n - m)?
            - ln_pq_beta(pair, k + 1, n)?;
        sum.add(ln_b + ln_inner, 1.0);
        Ok(())
    })?;
    Ok(sum.value())
}

/// The (p,q)-Baskakov-Beta operator `D_n(f, x)` with the default inner route.
pub fn baskakov_beta_apply(pair: &PQPair, f: &FunctionSpec, n: u32, x: f64, policy: &TruncationPolicy) -> Result<OperatorResult> {
    let mut out = baskakov_beta_apply_grid(pair, f, n, &[x], policy, InnerIntegration::Auto)?;
    Ok(out.remove(0))
}

/// `D_n(f, x)` at every point of `xs`. Inner integrals depend on `k` only,
/// so they are computed once and shared across the points.
pub fn baskakov_beta_apply_grid(
    pair: &PQPair,
    f: &FunctionSpec,
    n: u32,
    xs: &[f64],
    policy: &TruncationPolicy,
    method: InnerIntegration,
) -> Result<Vec<OperatorResult>> {
    if n < 1 {
        return Err(domain("the Baskakov-Beta operator needs n >= 1"));
    }
    pair.require_operator_regime()?;
    policy.validate()?;
    let coefficients = f.polynomial_coefficients();
    let use_expansion = match method {
        InnerIntegration::Auto => coefficients.is_some(),
        InnerIntegration::BetaExpansion => {
            if coefficients.is_none() {
                return Err(domain(format!("the Beta expansion needs a polynomial, got {f}")));
            }
            true
        }
        InnerIntegration::Quadrature => false,
    };
    let mut inner: Box<dyn InnerSource> = if use_expansion {
        let coefficients = coefficients.unwrap_or_default();
        let degree = f.polynomial_degree().unwrap_or(0) as u32;
        if n <= degree {
            return Err(domain(format!(
                "D_n of a degree-{degree} polynomial needs n > {degree}, got n = {n}"
            )));
        }
        Box::new(ExpansionInner {
            pair: *pair,
            n,
            coefficients,
            cache: Vec::new(),
        })
    } else {
        pair.require_strict("quadrature")?;
        Box::new(QuadratureInner::new(pair, f.clone(), n, *policy))
    };

    xs.iter()
        .map(|&x| {
            let mut sum = ScaledSum::default();
            let mut converged = true;
            let summary = walk_basis(pair, n, x, policy, |k, ln_b| {
                let (value, ok) = inner.value(k)?;
                converged &= ok;
                sum.add(ln_b, value);
                Ok(())
            })?;
            Ok(OperatorResult {
                value: sum.value(),
                k_terms_used: summary.terms,
                basis_tail_mass: summary.tail_mass,
                inner_integrals_converged: converged,
                trusted: converged && basis_tail_ok(&summary, policy),
            })
        })
        .collect()
}

/// Normalized inner integral
/// `(1 / B(k+1, n)) ∫ t^k / (1 ⊕ pt)^{n+k+1} f(q^2 p^{n+k} t) d_{p,q}t` by index.
trait InnerSource {
    fn value(&mut self, k: u32) -> Result<(f64, bool)>;
}

struct ExpansionInner {
    pair: PQPair,
    n: u32,
    coefficients: Vec<f64>,
    cache: Vec<f64>,
}

impl InnerSource for ExpansionInner {
    fn value(&mut self, k: u32) -> Result<(f64, bool)> {
        while self.cache.len() <= k as usize {
            let kk = self.cache.len() as u32;
            let mut acc = ScaledSum::default();
            for (m, &c) in self.coefficients.iter().enumerate() {
                if c != 0.0 {
                    acc.add(ln_inner_monomial(&self.pair, kk, m as u32, self.n), c);
                }
            }
            self.cache.push(acc.value());
        }
        Ok((self.cache[k as usize], true))
    }
}

struct QuadratureInner {
    pair: PQPair,
    f: FunctionSpec,
    n: u32,
    policy: TruncationPolicy,
    toward_zero: Vec<PowerBasisPrefix>,
    toward_inf: Vec<PowerBasisPrefix>,
    cache: Vec<(f64, bool)>,
}

impl QuadratureInner {
    fn new(pair: &PQPair, f: FunctionSpec, n: u32, policy: TruncationPolicy) -> Self {
        QuadratureInner {
            pair: *pair,
            f,
            n,
            policy,
            toward_zero: Vec::new(),
            toward_inf: Vec::new(),
            cache: Vec::new(),
        }
    }

    fn compute(&mut self, k: u32) -> Result<(f64, bool)> {
        let pair = self.pair;
        let total = (self.n + k + 1) as usize;
        let scale = pair.q() * pair.q() * pair.p().powi((self.n + k) as i32);
        let (toward_zero, toward_inf, f) = (&mut self.toward_zero, &mut self.toward_inf, &self.f);
        let (sums, results) = improper_integral_parts(&pair, &self.policy, |i, t, ln_t| {
            let slot = if i >= 0 {
                let idx = i as usize;
                while toward_zero.len() <= idx {
                    let j = toward_zero.len() as i64;
                    toward_zero.push(PowerBasisPrefix::new(lattice_node(&pair, j).0));
                }
                &mut toward_zero[idx]
            } else {
                let idx = (-i - 1) as usize;
                while toward_inf.len() <= idx {
                    let j = -(toward_inf.len() as i64) - 1;
                    toward_inf.push(PowerBasisPrefix::new(lattice_node(&pair, j).0));
                }
                &mut toward_inf[idx]
            };
            let ln_kernel = k as f64 * ln_t - slot.ln_power(&pair, total);
            Ok([
                Term {
                    ln_weight: ln_kernel,
                    factor: f.eval(scale * t)?,
                },
                Term {
                    ln_weight: ln_kernel,
                    factor: 1.0,
                },
            ])
        })?;
        let [weighted, beta] = sums;
        Ok((weighted.ratio(&beta), results[0].converged && results[1].converged))
    }
}

impl InnerSource for QuadratureInner {
    fn value(&mut self, k: u32) -> Result<(f64, bool)> {
        while self.cache.len() <= k as usize {
            let kk = self.cache.len() as u32;
            let v = self.compute(kk)?;
            self.cache.push(v);
        }
        Ok(self.cache[k as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::pq_power_basis;
    use crate::function::NamedFunction;

    fn pair(p: f64, q: f64) -> PQPair {
        PQPair::new(p, q).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    const PAIRS: [(f64, f64); 3] = [(0.9, 0.8), (1.0, 0.9), (0.95, 0.9)];

    /// The basis formula multiplied out literally.
    fn basis_direct(pr: &PQPair, n: u32, k: u32, x: f64) -> f64 {
        let num = |j: u32| -> f64 { (0..j).map(|i| pr.p().powi((j - 1 - i) as i32) * pr.q().powi(i as i32)).sum() };
        let fact = |j: u32| -> f64 { (1..=j).map(num).product() };
        let binom = fact(n + k - 1) / (fact(n - 1) * fact(k));
        binom * pr.p().powf(k as f64 + (n * (n - 1)) as f64 / 2.0) * pr.q().powf((k * k.saturating_sub(1)) as f64 / 2.0)
            * x.powi(k as i32)
            / pq_power_basis(pr, x, n + k)
    }

    #[test]
    fn basis_examples() {
        for &(p, q) in &PAIRS {
            for n in 1..6 {
                assert!((baskakov_basis(&pair(p, q), n, 0, 0.0).unwrap() - 1.0).abs() < 1e-15);
                assert_eq!(baskakov_basis(&pair(p, q), n, 3, 0.0).unwrap(), 0.0);
            }
        }
        assert!((baskakov_basis(&PQPair::classical(), 2, 1, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let pr = pair(0.9, 0.8);
        let v = baskakov_basis(&pr, 3, 2, 1.0).unwrap();
        assert!(v > 0.0 && rel(v, basis_direct(&pr, 3, 2, 1.0)) < 1e-12);
        assert!(baskakov_basis(&pair(0.9, 0.9), 3, 2, 1.0).is_err());
        assert!(baskakov_basis(&pr, 0, 2, 1.0).is_err());
        assert!(baskakov_basis(&pr, 3, 2, -1.0).is_err());
    }

    #[test]
    fn walk_matches_direct_basis() {
        for &(p, q) in &PAIRS {
            let pr = pair(p, q);
            for &(n, x) in &[(1, 0.3), (4, 1.0), (9, 2.5)] {
                let mut walk = BasisWalk::new(&pr, n, x).unwrap();
                for k in 0..30 {
                    assert_eq!(walk.k(), k);
                    let direct = basis_direct(&pr, n, k, x);
                    assert!(rel(walk.ln_b().exp(), direct) < 1e-12, "{p} {q} n={n} k={k}");
                    assert!(rel(baskakov_basis(&pr, n, k, x).unwrap(), direct) < 1e-12);
                    walk.advance();
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let policy = TruncationPolicy::default();
        for &(p, q) in PAIRS.iter().chain(&[(1.0, 1.0)]) {
            let pr = pair(p, q);
            for n in 2..=20 {
                for &x in &[0.0, 0.5, 1.0, 2.0, 5.0] {
                    let s = basis_partition(&pr, n, x, &policy).unwrap();
                    assert!(s.stopped && s.tail_mass <= 1e-10, "{p} {q} n={n} x={x}: {s:?}");
                    assert!((s.mass - 1.0).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn baskakov_operator_examples() {
        let policy = TruncationPolicy::default();
        for &(p, q) in &PAIRS {
            let r = baskakov_apply(&pair(p, q), &FunctionSpec::constant(1.0), 4, 1.7, &policy).unwrap();
            assert!(r.trusted && (r.value - 1.0).abs() < 1e-12);
        }
        let r = baskakov_apply(&pair(0.9, 0.8), &FunctionSpec::monomial(1), 5, 1.5, &policy).unwrap();
        assert!(rel(r.value, 1.5) < 1e-12);
        let r = baskakov_apply(&PQPair::classical(), &FunctionSpec::monomial(2), 4, 1.0, &policy).unwrap();
        assert!(rel(r.value, 1.5) < 1e-12);
    }

    #[test]
    fn baskakov_second_moment_closed_form() {
        let pr = pair(0.9, 0.8);
        // [4] = 2.465 by direct summation, [3] = 2.17
        let expect = (2.465 + 0.81 * 0.8) / (0.8 * 2.17);
        assert!(rel(baskakov_moment_closed(&pr, 2, 3, 1.0).unwrap(), expect) < 1e-14);
        assert_eq!(baskakov_moment_closed(&pr, 0, 3, 1.0).unwrap(), 1.0);
        assert_eq!(baskakov_moment_closed(&pr, 1, 3, 2.5).unwrap(), 2.5);
        assert!(baskakov_moment_closed(&pr, 3, 3, 1.0).is_err());
        let policy = TruncationPolicy::default();
        for &(p, q) in &PAIRS {
            let pr = pair(p, q);
            for n in 1..10 {
                for &x in &[0.0, 0.4, 1.0, 3.0] {
                    for m in 0..=2 {
                        let numeric = baskakov_apply(&pr, &FunctionSpec::monomial(m), n, x, &policy).unwrap().value;
                        let closed = baskakov_moment_closed(&pr, m, n, x).unwrap();
                        assert!((numeric - closed).abs() <= 1e-10 * closed.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn recurrence_residuals() {
        let policy = TruncationPolicy::default();
        for &(p, q, n, x) in &[(0.9, 0.8, 4, 1.0), (1.0, 0.9, 6, 2.0), (0.95, 0.9, 3, 0.5)] {
            for m in 0..=1 {
                let r = verify_baskakov_recurrence(&pair(p, q), n, m, x, &policy).unwrap();
                assert!(r <= 1e-8, "{p} {q} n={n} m={m}: {r}");
            }
        }
        assert!(verify_baskakov_recurrence(&pair(0.9, 0.8), 4, 0, 0.0, &policy).is_err());
        assert!(verify_baskakov_recurrence(&PQPair::classical(), 4, 0, 1.0, &policy).is_err());
    }

    #[test]
    fn closed_moment_examples() {
        let c = PQPair::classical();
        assert_eq!(moments_closed(&pair(0.9, 0.8), 0, 1, 3.0).unwrap(), 1.0);
        assert!(rel(moments_closed(&c, 1, 3, 1.0).unwrap(), 2.0) < 1e-15);
        assert!(rel(moments_closed(&c, 2, 4, 1.0).unwrap(), 38.0 / 6.0) < 1e-14);
        let e1 = moments_closed(&pair(0.9, 0.8), 1, 3, 2.0).unwrap();
        assert!(rel(e1, (2.17 * 2.0 + 0.9 * 0.8) / 1.7) < 1e-14);
        assert!(moments_closed(&c, 1, 1, 1.0).is_err());
        assert!(moments_closed(&c, 2, 2, 1.0).is_err());
        assert!(moments_closed(&c, 3, 9, 1.0).is_err());
    }

    #[test]
    fn classical_reduction_of_moments() {
        let c = PQPair::classical();
        for n in 3..30u32 {
            let nf = n as f64;
            for &x in &[0.0, 0.5, 1.0, 2.0, 5.0] {
                let m1 = (nf * x + 1.0) / (nf - 1.0);
                let m2 = (nf * (nf + 1.0) * x * x + 4.0 * nf * x + 2.0) / ((nf - 1.0) * (nf - 2.0));
                assert!(rel(moments_closed(&c, 1, n, x).unwrap(), m1) < 1e-13);
                assert!(rel(moments_closed(&c, 2, n, x).unwrap(), m2) < 1e-13);
            }
        }
    }

    #[test]
    fn central_moment_examples() {
        let c = PQPair::classical();
        assert!(rel(central_moment(&c, 1, 5, 0.0).unwrap(), 0.25) < 1e-15);
        assert!(central_moment(&c, 1, 2, 0.0).is_err());
        assert!(central_moment(&c, 3, 5, 0.0).is_err());
        for &(p, q) in PAIRS.iter().chain(&[(1.0, 1.0)]) {
            let pr = pair(p, q);
            for n in 3..=15 {
                for &x in &[0.0, 0.5, 1.0, 2.0, 5.0] {
                    let m1 = moments_closed(&pr, 1, n, x).unwrap();
                    let m2 = moments_closed(&pr, 2, n, x).unwrap();
                    assert!((central_moment(&pr, 1, n, x).unwrap() - (m1 - x)).abs() < 1e-12);
                    let expanded = m2 - 2.0 * x * m1 + x * x;
                    assert!(rel(central_moment(&pr, 2, n, x).unwrap(), expanded) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn telescoped_beta_ratio_matches_closed_form() {
        for &(p, q) in &PAIRS {
            let pr = pair(p, q);
            for n in 3..12 {
                for k in 0..80 {
                    for m in 0..3 {
                        let literal = ln_pq_beta(&pr, k + m + 1, n - m).unwrap() - ln_pq_beta(&pr, k + 1, n).unwrap();
                        assert!((ln_beta_ratio(&pr, k, m, n) - literal).abs() < 1e-9 * literal.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn monomial_exact_examples() {
        let policy = TruncationPolicy::default();
        let pr = pair(0.9, 0.8);
        assert!(rel(baskakov_beta_monomial_exact(&pr, 0, 3, 2.0, &policy).unwrap(), 1.0) < 1e-12);
        let v = baskakov_beta_monomial_exact(&pr, 1, 3, 2.0, &policy).unwrap();
        assert!(rel(v, 2.976470588235294) < 1e-10);
        let pr = pair(0.95, 0.9);
        let v = baskakov_beta_monomial_exact(&pr, 2, 4, 1.0, &policy).unwrap();
        assert!(rel(v, moments_closed(&pr, 2, 4, 1.0).unwrap()) < 1e-9);
        assert!(baskakov_beta_monomial_exact(&pr, 2, 2, 1.0, &policy).is_err());
    }

    #[test]
    fn beta_expansion_path_examples() {
        let policy = TruncationPolicy::default();
        let pr = pair(0.9, 0.8);
        for &x in &[0.0, 1.0, 4.0] {
            let r = baskakov_beta_apply(&pr, &FunctionSpec::constant(1.0), 2, x, &policy).unwrap();
            assert!(r.trusted && rel(r.value, 1.0) < 1e-12);
        }
        let r = baskakov_beta_apply(&pr, &FunctionSpec::monomial(1), 3, 2.0, &policy).unwrap();
        assert!(rel(r.value, (2.17 * 2.0 + 0.72) / 1.7) < 1e-10);
        let fig1 = FunctionSpec::polynomial(vec![2015.0, -12.0, 18.0]).unwrap();
        let r = baskakov_beta_apply(&pr, &fig1, 10, 1.0, &policy).unwrap();
        let m1 = moments_closed(&pr, 1, 10, 1.0).unwrap();
        let m2 = moments_closed(&pr, 2, 10, 1.0).unwrap();
        assert!(rel(r.value, 18.0 * m2 - 12.0 * m1 + 2015.0) < 1e-10);
        assert!(baskakov_beta_apply(&pr, &fig1, 2, 1.0, &policy).is_err());
        let sin = FunctionSpec::named(NamedFunction::Sin);
        assert!(baskakov_beta_apply_grid(&pr, &sin, 3, &[1.0], &policy, InnerIntegration::BetaExpansion).is_err());
    }

    #[test]
    fn quadrature_path_is_normalized() {
        let policy = TruncationPolicy::default();
        for &(p, q) in &PAIRS {
            let out = baskakov_beta_apply_grid(
                &pair(p, q),
                &FunctionSpec::constant(1.0),
                4,
                &[0.0, 0.5, 2.0, 5.0],
                &policy,
                InnerIntegration::Quadrature,
            )
            .unwrap();
            for r in out {
                assert!(r.trusted && rel(r.value, 1.0) < 1e-12);
            }
        }
        assert!(baskakov_beta_apply_grid(
            &PQPair::classical(),
            &FunctionSpec::constant(1.0),
            4,
            &[1.0],
            &policy,
            InnerIntegration::Quadrature
        )
        .is_err());
    }

    #[test]
    fn quadrature_path_matches_lemma_moments_when_p_is_one() {
        let policy = TruncationPolicy::default();
        let pr = pair(1.0, 0.9);
        for m in 1..=2 {
            let out = baskakov_beta_apply_grid(&pr, &FunctionSpec::monomial(m), 6, &[0.5, 2.0], &policy, InnerIntegration::Quadrature).unwrap();
            for (r, x) in out.iter().zip([0.5, 2.0]) {
                assert!(r.trusted);
                assert!(rel(r.value, moments_closed(&pr, m, 6, x).unwrap()) < 1e-9);
            }
        }
    }

    #[test]
    fn quadrature_path_first_moment_for_p_below_one() {
        // Quadrature-normalized first moment at k: q^{1-k} p^{2n+k-2} [k+1]/[n-1]
        // (bilateral Beta ratio), against the Beta-expansion value p^{n-2} q^{1-k} [k+1]/[n-1].
        let policy = TruncationPolicy::default();
        let pr = pair(0.9, 0.8);
        let n = 4;
        let mut inner = QuadratureInner::new(&pr, FunctionSpec::monomial(1), n, policy);
        for k in 0..20u32 {
            let (v, ok) = inner.value(k).unwrap();
            assert!(ok);
            let expect = 0.8f64.powi(1 - k as i32) * 0.9f64.powi((2 * n + k) as i32 - 2) * pq_number(&pr, k + 1)
                / pq_number(&pr, n - 1);
            assert!(rel(v, expect) < 1e-10, "k={k}");
        }
    }

    #[test]
    fn operators_are_positive_and_monotone() {
        let policy = TruncationPolicy::default();
        let pr = pair(0.9, 0.8);
        let f = FunctionSpec::polynomial(vec![0.5, -1.0, 1.0]).unwrap(); // t^2 - t + 0.5 > 0
        let g = FunctionSpec::polynomial(vec![1.5, -1.0, 1.0]).unwrap(); // f + 1
        for &x in &[0.0, 0.3, 1.0, 4.0] {
            let df = baskakov_beta_apply(&pr, &f, 5, x, &policy).unwrap().value;
            let dg = baskakov_beta_apply(&pr, &g, 5, x, &policy).unwrap().value;
            assert!(df > 0.0 && df <= dg);
            assert!((dg - df - 1.0).abs() < 1e-10);
            assert!(baskakov_apply(&pr, &f, 5, x, &policy).unwrap().value > 0.0);
        }
    }

    #[test]
    fn named_function_through_quadrature() {
        let policy = TruncationPolicy::default();
        let pr = pair(0.95, 0.9);
        let f = FunctionSpec::named(NamedFunction::ExpNeg);
        let r = baskakov_beta_apply(&pr, &f, 10, 1.0, &policy).unwrap();
        assert!(r.trusted);
        assert!(r.value > 0.0 && r.value < 1.0);
    }
}
