//! Exact-regime (p,q)-calculus primitives.
//!
//! Everything here is a pure function of a [`PQPair`] and integer or real
//! arguments. Products that underflow or overflow double precision for large
//! orders (factorials, binomials, Gamma and Beta values, the power basis) have
//! logarithm-domain twins prefixed `ln_`; the plain versions switch to the log
//! path automatically once the order exceeds [`LOG_DOMAIN_THRESHOLD`].

use crate::error::{domain, Error, Result};
use crate::function::FunctionSpec;

/// Orders above this are evaluated through logarithms.
pub const LOG_DOMAIN_THRESHOLD: u32 = 40;

/// The deformation parameters `(p, q)` with `0 < q <= p <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQPair {
    p: f64,
    q: f64,
}

impl PQPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let reject = |reason| Err(Error::InvalidPair { p, q, reason });
        if !p.is_finite() || !q.is_finite() {
            return reject("p and q must be finite");
        }
        if q <= 0.0 {
            return reject("q must be positive (0 < q <= p <= 1)");
        }
        if p > 1.0 {
            return reject("p must not exceed 1 (0 < q <= p <= 1)");
        }
        if q > p {
            return reject("q must not exceed p (0 < q <= p <= 1)");
        }
        Ok(PQPair { p, q })
    }

    /// `p = q = 1`.
    pub fn classical() -> Self {
        PQPair { p: 1.0, q: 1.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when `q < p`, the regime the operators and Jackson integrals need.
    pub fn is_strict(&self) -> bool {
        self.q < self.p
    }

    pub fn is_classical(&self) -> bool {
        self.p == 1.0 && self.q == 1.0
    }

    /// Fails unless `q < p`.
    pub fn require_strict(&self, what: &str) -> Result<()> {
        if self.is_strict() {
            Ok(())
        } else {
            Err(Error::InvalidPair {
                p: self.p,
                q: self.q,
                reason: strict_reason(what),
            })
        }
    }

    /// Fails unless `q < p` or `p = q = 1`.
    pub fn require_operator_regime(&self) -> Result<()> {
        if self.is_strict() || self.is_classical() {
            Ok(())
        } else {
            Err(Error::InvalidPair {
                p: self.p,
                q: self.q,
                reason: "operators need 0 < q < p <= 1 or p = q = 1",
            })
        }
    }
}

fn strict_reason(what: &str) -> &'static str {
    match what {
        "quadrature" => "Jackson (p,q)-integration needs q < p strictly",
        "derivative" => "the (p,q)-difference quotient needs q < p strictly",
        "recurrence" => "the moment recurrence uses D_{p,q} and needs q < p strictly",
        _ => "this operation needs q < p strictly",
    }
}

/// Tolerances and caps for infinite-series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(rel_tol: f64, abs_tol: f64, max_terms: usize) -> Result<Self> {
        let policy = TruncationPolicy {
            rel_tol,
            abs_tol,
            max_terms,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidPolicy("max_terms must be at least 1".into()));
        }
        Ok(())
    }

    /// Stopping threshold for a term given the current partial sum.
    pub fn threshold(&self, partial: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * partial.abs())
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

/// `[n]_{p,q} = p^{n-1} + p^{n-2} q + ... + q^{n-1}`.
///
/// Evaluated as `p^{n-1} (1 - r^n) / (1 - r)` with `r = q/p`, which avoids the
/// cancellation in `(p^n - q^n)/(p - q)`. For `p = q` this is the limit
/// `n p^{n-1}`.
pub fn pq_number(pair: &PQPair, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, q) = (pair.p, pair.q);
    if p == q {
        return n as f64 * p.powi(n as i32 - 1);
    }
    let ln_r = (q / p).ln();
    let num = -(n as f64 * ln_r).exp_m1();
    let den = (p - q) / p;
    p.powi(n as i32 - 1) * num / den
}

/// `ln [n]_{p,q}`; `-inf` for `n = 0`.
pub fn ln_pq_number(pair: &PQPair, n: u32) -> f64 {
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let (p, q) = (pair.p, pair.q);
    let nf = n as f64;
    if p == q {
        return nf.ln() + (nf - 1.0) * p.ln();
    }
    let ln_r = (q / p).ln();
    (nf - 1.0) * p.ln() + (-(nf * ln_r).exp_m1()).ln() - ((p - q) / p).ln()
}

/// `[n]_{p,q}! = [1][2]...[n]`, with `[0]! = 1`.
pub fn pq_factorial(pair: &PQPair, n: u32) -> f64 {
    if n > LOG_DOMAIN_THRESHOLD {
        return ln_pq_factorial(pair, n).exp();
    }
    (1..=n).map(|r| pq_number(pair, r)).product()
}

pub fn ln_pq_factorial(pair: &PQPair, n: u32) -> f64 {
    (1..=n).map(|r| ln_pq_number(pair, r)).sum()
}

/// The (p,q)-binomial coefficient `[n]! / ([n-r]! [r]!)`.
pub fn pq_binomial(pair: &PQPair, n: u32, r: u32) -> Result<f64> {
    if r > n {
        return Err(domain(format!("binomial needs r <= n, got n = {n}, r = {r}")));
    }
    if n > LOG_DOMAIN_THRESHOLD {
        return Ok(ln_pq_binomial(pair, n, r)?.exp());
    }
    Ok(pq_factorial(pair, n) / (pq_factorial(pair, n - r) * pq_factorial(pair, r)))
}

pub fn ln_pq_binomial(pair: &PQPair, n: u32, r: u32) -> Result<f64> {
    if r > n {
        return Err(domain(format!("binomial needs r <= n, got n = {n}, r = {r}")));
    }
    // Only the factors above max(r, n-r) survive the cancellation.
    let (lo, hi) = if r < n - r { (r, n - r) } else { (n - r, r) };
    let top: f64 = (hi + 1..=n).map(|j| ln_pq_number(pair, j)).sum();
    Ok(top - ln_pq_factorial(pair, lo))
}

/// `Γ_{p,q}(arg) = [arg - 1]_{p,q}!`, defined for integer `arg >= 1`.
pub fn pq_gamma(pair: &PQPair, arg: u32) -> Result<f64> {
    if arg < 1 {
        return Err(domain("the (p,q)-Gamma function is defined for integer arguments >= 1"));
    }
    Ok(pq_factorial(pair, arg - 1))
}

pub fn ln_pq_gamma(pair: &PQPair, arg: u32) -> Result<f64> {
    if arg < 1 {
        return Err(domain("the (p,q)-Gamma function is defined for integer arguments >= 1"));
    }
    Ok(ln_pq_factorial(pair, arg - 1))
}

/// The power basis `(1 ⊕ x)^n_{p,q} = Π_{j<n} (p^j + q^j x)`.
///
/// `(1 ⊕ pt)^n` is this with `x = p t`.
pub fn pq_power_basis(pair: &PQPair, x: f64, n: u32) -> f64 {
    if n > LOG_DOMAIN_THRESHOLD && x >= 0.0 {
        return ln_pq_power_basis(pair, x, n).exp();
    }
    (0..n)
        .map(|j| pair.p.powi(j as i32) + pair.q.powi(j as i32) * x)
        .product()
}

/// `ln (1 ⊕ x)^n_{p,q}`. NaN when some factor is not positive (only possible
/// for negative `x`).
pub fn ln_pq_power_basis(pair: &PQPair, x: f64, n: u32) -> f64 {
    (0..n)
        .map(|j| (pair.p.powi(j as i32) + pair.q.powi(j as i32) * x).ln())
        .sum()
}

/// Closed-form (p,q)-Beta function of the second kind at integer arguments:
/// `q^{1 - m(m-1)/2} p^{-m(m+1)/2} Γ(m) Γ(n) / Γ(m+n)`.
///
/// Not symmetric in `(m, n)` unless `p = q = 1`.
pub fn pq_beta(pair: &PQPair, m: u32, n: u32) -> Result<f64> {
    Ok(ln_pq_beta(pair, m, n)?.exp())
}

pub fn ln_pq_beta(pair: &PQPair, m: u32, n: u32) -> Result<f64> {
    if m < 1 || n < 1 {
        return Err(domain(format!(
            "the (p,q)-Beta function needs m >= 1 and n >= 1, got m = {m}, n = {n}"
        )));
    }
    let (mf, lp, lq) = (m as f64, pair.p.ln(), pair.q.ln());
    let prefactor = (1.0 - mf * (mf - 1.0) / 2.0) * lq - mf * (mf + 1.0) / 2.0 * lp;
    Ok(prefactor + ln_pq_factorial(pair, m - 1) + ln_pq_factorial(pair, n - 1)
        - ln_pq_factorial(pair, m + n - 1))
}

/// The (p,q)-difference quotient `(f(px) - f(qx)) / ((p - q) x)`.
pub fn pq_derivative(pair: &PQPair, f: &FunctionSpec, x: f64) -> Result<f64> {
    check_derivative_point(pair, x)?;
    let fp = f.eval(pair.p * x)?;
    let fq = f.eval(pair.q * x)?;
    Ok((fp - fq) / ((pair.p - pair.q) * x))
}

/// [`pq_derivative`] for an arbitrary closure.
pub fn pq_derivative_with<F>(pair: &PQPair, x: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_derivative_point(pair, x)?;
    let fp = f(pair.p * x)?;
    let fq = f(pair.q * x)?;
    Ok((fp - fq) / ((pair.p - pair.q) * x))
}

fn check_derivative_point(pair: &PQPair, x: f64) -> Result<()> {
    pair.require_strict("derivative")?;
    if x == 0.0 {
        return Err(domain("the (p,q)-derivative is not defined at x = 0"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: f64, q: f64) -> PQPair {
        PQPair::new(p, q).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Definition-level oracle: the raw sum of p^{n-1-j} q^j.
    fn number_by_sum(pair: &PQPair, n: u32) -> f64 {
        (0..n)
            .map(|j| pair.p.powi((n - 1 - j) as i32) * pair.q.powi(j as i32))
            .sum()
    }

    #[test]
    fn pair_rejects_out_of_regime() {
        assert!(PQPair::new(0.9, 0.0).is_err());
        assert!(PQPair::new(0.9, -0.1).is_err());
        assert!(PQPair::new(1.1, 0.5).is_err());
        assert!(PQPair::new(0.8, 0.9).is_err());
        assert!(PQPair::new(f64::NAN, 0.5).is_err());
        assert!(PQPair::new(0.9, 0.9).is_ok());
        assert!(PQPair::new(1.0, 1.0).unwrap().is_classical());
    }

    #[test]
    fn numbers_match_examples() {
        assert_eq!(pq_number(&PQPair::classical(), 5), 5.0);
        assert!((pq_number(&pair(0.9, 0.8), 2) - 1.7).abs() < 1e-15);
        assert!((pq_number(&pair(0.9, 0.8), 3) - 2.17).abs() < 1e-15);
        assert!((pq_number(&pair(0.9, 0.8), 4) - 2.465).abs() < 1e-15);
        assert_eq!(pq_number(&pair(0.9, 0.8), 0), 0.0);
        // p = q < 1 limit
        assert!((pq_number(&pair(0.7, 0.7), 4) - 4.0 * 0.343).abs() < 1e-15);
    }

    #[test]
    fn numbers_agree_with_direct_sum_and_recurrences() {
        for &(p, q) in &[(0.9, 0.8), (0.95, 0.9), (1.0, 0.9), (0.5, 0.1), (0.999, 0.998)] {
            let pr = pair(p, q);
            for n in 1..=50u32 {
                let v = pq_number(&pr, n);
                assert!(rel(v, number_by_sum(&pr, n)) < 1e-12, "p={p} q={q} n={n}");
                let prev = pq_number(&pr, n - 1);
                let a = p * prev + q.powi(n as i32 - 1);
                let b = q * prev + p.powi(n as i32 - 1);
                assert!(rel(a, v) < 1e-12 && rel(b, v) < 1e-12);
                assert!(rel(ln_pq_number(&pr, n).exp(), v) < 1e-12);
            }
        }
    }

    #[test]
    fn numbers_approach_integers_along_q_equals_p_squared() {
        let mut last = f64::INFINITY;
        for &p in &[0.9, 0.99, 0.999] {
            let pr = pair(p, p * p);
            let err: f64 = (1..=10).map(|n| (pq_number(&pr, n) - n as f64).abs()).sum();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn factorial_and_gamma() {
        let pr = pair(0.9, 0.8);
        assert_eq!(pq_factorial(&pr, 0), 1.0);
        assert_eq!(pq_factorial(&PQPair::classical(), 4), 24.0);
        assert!((pq_factorial(&pr, 3) - 3.689).abs() < 1e-14);
        assert_eq!(pq_gamma(&pr, 1).unwrap(), 1.0);
        assert_eq!(pq_gamma(&PQPair::classical(), 5).unwrap(), 24.0);
        assert!((pq_gamma(&pr, 4).unwrap() - 3.689).abs() < 1e-14);
        assert!(pq_gamma(&pr, 0).is_err());
        for n in 1..60u32 {
            let lhs = pq_gamma(&pr, n + 1).unwrap();
            let rhs = pq_number(&pr, n) * pq_gamma(&pr, n).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn binomial_examples_and_errors() {
        let pr = pair(0.9, 0.8);
        assert!((pq_binomial(&pr, 7, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pq_binomial(&PQPair::classical(), 5, 2).unwrap() - 10.0).abs() < 1e-12);
        assert!((pq_binomial(&pr, 3, 1).unwrap() - 2.17).abs() < 1e-14);
        assert!(matches!(pq_binomial(&pr, 3, 4), Err(Error::Domain(_))));
        assert!(ln_pq_binomial(&pr, 3, 4).is_err());
        // log path against the direct product for a moderate order
        let direct = pq_factorial(&pr, 30) / (pq_factorial(&pr, 18) * pq_factorial(&pr, 12));
        assert!(rel(ln_pq_binomial(&pr, 30, 12).unwrap().exp(), direct) < 1e-12);
    }

    #[test]
    fn power_basis_examples() {
        let pr = pair(0.9, 0.8);
        assert!(rel(pq_power_basis(&pr, 0.0, 3), 0.9f64.powi(3)) < 1e-15);
        assert_eq!(pq_power_basis(&PQPair::classical(), 2.0, 4), 81.0);
        assert!((pq_power_basis(&pr, 1.0, 2) - 3.4).abs() < 1e-15);
        assert_eq!(pq_power_basis(&pr, 5.0, 0), 1.0);
        assert!(rel(ln_pq_power_basis(&pr, 1.3, 25).exp(), pq_power_basis(&pr, 1.3, 25)) < 1e-12);
        // printed expansion (1+pt)(p+pqt)(p^2+pq^2 t) with x = pt
        let t = 0.7;
        let printed = (1.0 + 0.9 * t) * (0.9 + 0.9 * 0.8 * t) * (0.81 + 0.9 * 0.64 * t);
        assert!(rel(pq_power_basis(&pr, 0.9 * t, 3), printed) < 1e-15);
    }

    #[test]
    fn beta_examples() {
        let classical = pq_beta(&PQPair::classical(), 2, 3).unwrap();
        assert!(rel(classical, 1.0 / 12.0) < 1e-12);
        let pr = pair(0.9, 0.8);
        let b12 = pq_beta(&pr, 1, 2).unwrap();
        assert!(rel(b12, (0.8 / 0.9) / 1.7) < 1e-12);
        let b21 = pq_beta(&pr, 2, 1).unwrap();
        assert!((b12 - b21).abs() > 1e-3);
        assert!(pq_beta(&pr, 0, 2).is_err());
        assert!(pq_beta(&pr, 2, 0).is_err());
    }

    #[test]
    fn beta_prefactor_matches_displayed_form() {
        // q Γ(m)Γ(n) / ((p^{m+1} q^{m-1})^{m/2} Γ(m+n))
        for &(p, q) in &[(0.9, 0.8), (1.0, 0.9), (0.95, 0.9)] {
            let pr = pair(p, q);
            for m in 1..=6u32 {
                for n in 1..=6u32 {
                    let g = |a| pq_gamma(&pr, a).unwrap();
                    let mf = m as f64;
                    let displayed = q * g(m) * g(n)
                        / ((p.powf(mf + 1.0) * q.powf(mf - 1.0)).powf(mf / 2.0) * g(m + n));
                    assert!(rel(pq_beta(&pr, m, n).unwrap(), displayed) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn classical_beta_is_exact_at_integers() {
        let c = PQPair::classical();
        for m in 1..=8u32 {
            for n in 1..=8u32 {
                let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
                let exact = fact(m - 1) * fact(n - 1) / fact(m + n - 1);
                assert!(rel(pq_beta(&c, m, n).unwrap(), exact) < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let pr = pair(0.9, 0.8);
        let c = FunctionSpec::constant(3.5);
        assert_eq!(pq_derivative(&pr, &c, 1.7).unwrap(), 0.0);
        let sq = FunctionSpec::monomial(2);
        assert!((pq_derivative(&pr, &sq, 1.0).unwrap() - 1.7).abs() < 1e-12);
        let cube = FunctionSpec::monomial(3);
        assert!((pq_derivative(&pr, &cube, 2.0).unwrap() - 8.68).abs() < 1e-12);
        assert!(pq_derivative(&pr, &sq, 0.0).is_err());
        assert!(pq_derivative(&pair(0.9, 0.9), &sq, 1.0).is_err());
        assert!(pq_derivative(&PQPair::classical(), &sq, 1.0).is_err());
    }

    #[test]
    fn derivative_monomial_eigenrelation() {
        for &(p, q) in &[(0.9, 0.8), (1.0, 0.9), (0.95, 0.9)] {
            let pr = pair(p, q);
            for n in 0..=8u32 {
                let f = FunctionSpec::monomial(n);
                for &x in &[0.3, 1.0, 2.5, -1.2] {
                    let d = pq_derivative(&pr, &f, x).unwrap();
                    let expect = pq_number(&pr, n) * x.powi(n as i32 - 1);
                    let scale = expect.abs().max(1e-300);
                    assert!((d - expect).abs() / scale < 1e-10 || (n == 0 && d == 0.0));
                }
            }
        }
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(1e-12, 1e-14, 100).is_ok());
        assert!(TruncationPolicy::new(0.0, 1e-14, 100).is_err());
        assert!(TruncationPolicy::new(1e-12, -1.0, 100).is_err());
        assert!(TruncationPolicy::new(1e-12, 1e-14, 0).is_err());
        assert_eq!(TruncationPolicy::default().max_terms, 10_000);
    }
}
