//! Hypergeometric tail probabilities, computed in log space.
//!
//! The co-occurrence test and the enrichment test both reduce to tails of
//! `H(X | T, N_P, N_Q) = C(N_P, X) C(T-N_P, N_Q-X) / C(T, N_Q)`.
//! Tails are accumulated on the survival side starting from the extreme
//! (smallest) term, with one log-space anchor term and an exact-ratio
//! recurrence for the rest, under Neumaier compensation.

use crate::error::{Error, Result};
use crate::num::Real;

/// ln(n!) for 0 <= n <= 20, from the exact `u64` factorials.
fn ln_factorial_small(n: u64) -> f64 {
    const FACT: [u64; 21] = [
        1,
        1,
        2,
        6,
        24,
        120,
        720,
        5040,
        40320,
        362880,
        3628800,
        39916800,
        479001600,
        6227020800,
        87178291200,
        1307674368000,
        20922789888000,
        355687428096000,
        6402373705728000,
        121645100408832000,
        2432902008176640000,
    ];
    (FACT[n as usize] as f64).ln()
}

/// Natural log of n!.
///
/// Exact table up to 20, Stirling's series beyond; absolute error is well
/// below 1e-13 over the whole range used by the pipeline.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        return ln_factorial_small(n);
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 0.5 * ln(2 pi)
    const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
    let series = inv
        * (1.0 / 12.0
            + inv2 * (-1.0 / 360.0 + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 / 1188.0))));
    (x + 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_binom(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn check_params(t: u64, n_p: u64, n_q: u64) -> Result<()> {
    if n_p > t || n_q > t {
        return Err(Error::Domain(format!(
            "hypergeometric parameters out of domain: N_P={n_p}, N_Q={n_q} must not exceed T={t}"
        )));
    }
    Ok(())
}

fn support(t: u64, n_p: u64, n_q: u64) -> (u64, u64) {
    ((n_p + n_q).saturating_sub(t), n_p.min(n_q))
}

/// Point mass H(X | T, N_P, N_Q); zero outside the support.
pub fn hypergeom_pmf<F: Real>(x: u64, t: u64, n_p: u64, n_q: u64) -> Result<F> {
    check_params(t, n_p, n_q)?;
    let (lo, hi) = support(t, n_p, n_q);
    if x < lo || x > hi {
        return Ok(F::zero());
    }
    let ln_p = ln_binom(n_p, x) + ln_binom(t - n_p, n_q - x) - ln_binom(t, n_q);
    Ok(F::from_f64_lossy(ln_p).exp())
}

/// Neumaier-compensated accumulator.
struct Compensated<F: Real> {
    sum: F,
    carry: F,
}

impl<F: Real> Compensated<F> {
    fn new() -> Self {
        Compensated {
            sum: F::zero(),
            carry: F::zero(),
        }
    }

    fn add(&mut self, term: F) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.carry = self.carry + ((self.sum - t) + term);
        } else {
            self.carry = self.carry + ((term - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(self) -> F {
        self.sum + self.carry
    }
}

/// Upper tail `sum_{X=x0}^{min(N_P,N_Q)} H(X | T, N_P, N_Q)`.
///
/// Returns exactly 1 when the tail covers the whole support (in particular
/// whenever `N_P = T` or `N_Q = T`, where the distribution is a point mass).
pub fn survival<F: Real>(t: u64, n_p: u64, n_q: u64, x0: u64) -> Result<F> {
    check_params(t, n_p, n_q)?;
    let (lo, hi) = support(t, n_p, n_q);
    if x0 > hi {
        return Ok(F::zero());
    }
    if x0 <= lo {
        return Ok(F::one());
    }
    // Anchor at the extreme term and walk down toward x0; in the validated
    // regime (x0 past the mode) this accumulates smallest terms first.
    let ln_top = ln_binom(n_p, hi) + ln_binom(t - n_p, n_q - hi) - ln_binom(t, n_q);
    let mut term = F::from_f64_lossy(ln_top).exp();
    let mut acc = Compensated::new();
    acc.add(term);
    let mut x = hi;
    while x > x0 {
        // H(X-1) = H(X) * X (T-N_P-N_Q+X) / ((N_P-X+1)(N_Q-X+1))
        let num = (x as u128) * ((t + x) as u128 - n_p as u128 - n_q as u128);
        let den = ((n_p - x + 1) as u128) * ((n_q - x + 1) as u128);
        term = term * F::from_f64_lossy(num as f64) / F::from_f64_lossy(den as f64);
        acc.add(term);
        x -= 1;
    }
    Ok(acc.value().min(F::one()))
}

/// Lower tail `sum_{X=max(0, N_P+N_Q-T)}^{x0} H(X | T, N_P, N_Q)`.
pub fn lower_tail<F: Real>(t: u64, n_p: u64, n_q: u64, x0: u64) -> Result<F> {
    check_params(t, n_p, n_q)?;
    let (lo, hi) = support(t, n_p, n_q);
    if x0 >= hi {
        return Ok(F::one());
    }
    if x0 < lo {
        return Ok(F::zero());
    }
    let ln_bottom = ln_binom(n_p, lo) + ln_binom(t - n_p, n_q - lo) - ln_binom(t, n_q);
    let mut term = F::from_f64_lossy(ln_bottom).exp();
    let mut acc = Compensated::new();
    acc.add(term);
    let mut x = lo;
    while x < x0 {
        // H(X+1) = H(X) * (N_P-X)(N_Q-X) / ((X+1)(T-N_P-N_Q+X+1))
        let num = ((n_p - x) as u128) * ((n_q - x) as u128);
        let den = ((x + 1) as u128) * ((t + x + 1) as u128 - n_p as u128 - n_q as u128);
        term = term * F::from_f64_lossy(num as f64) / F::from_f64_lossy(den as f64);
        acc.add(term);
        x += 1;
    }
    Ok(acc.value().min(F::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn ln_factorial_matches_direct_summation() {
        let mut acc = 0.0_f64;
        for n in 1..=300u64 {
            acc += (n as f64).ln();
            assert!(
                (ln_factorial(n) - acc).abs() < 1e-10,
                "n={n}: {} vs {acc}",
                ln_factorial(n)
            );
        }
    }

    #[test]
    fn pmf_spot_values() {
        // H(2 | 4, 2, 2) = C(2,2)C(2,0)/C(4,2) = 1/6
        let p: f64 = hypergeom_pmf(2, 4, 2, 2).unwrap();
        assert!(rel_err(p, 1.0 / 6.0) < 1e-14);
        // H(5 | 10, 5, 5) = 1/C(10,5) = 1/252
        let p: f64 = hypergeom_pmf(5, 10, 5, 5).unwrap();
        assert!(rel_err(p, 1.0 / 252.0) < 1e-14);
        // H(0 | T, 0, N_Q) = 1
        let p: f64 = hypergeom_pmf(0, 17, 0, 9).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn pmf_outside_support_is_zero() {
        let p: f64 = hypergeom_pmf(3, 4, 2, 2).unwrap();
        assert_eq!(p, 0.0);
        // lower support edge: X >= N_P+N_Q-T = 1
        let p: f64 = hypergeom_pmf(0, 3, 2, 2).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn pmf_rejects_bad_params() {
        assert!(hypergeom_pmf::<f64>(0, 4, 5, 2).is_err());
        assert!(hypergeom_pmf::<f64>(0, 4, 2, 5).is_err());
    }

    #[test]
    fn pmf_sums_to_one_over_support() {
        for &(t, n_p, n_q) in &[(10u64, 4u64, 7u64), (30, 15, 15), (60, 30, 29), (7, 7, 3)] {
            let (lo, hi) = support(t, n_p, n_q);
            let total: f64 = (lo..=hi)
                .map(|x| hypergeom_pmf::<f64>(x, t, n_p, n_q).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "sum {total} for ({t},{n_p},{n_q})");
        }
    }

    #[test]
    fn survival_full_tail_is_exactly_one() {
        let p: f64 = survival(10, 3, 4, 0).unwrap();
        assert_eq!(p, 1.0);
        // N_P = T: point mass, tail at the point is still exactly 1
        let p: f64 = survival(10, 10, 4, 4).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn survival_spot_values() {
        let p: f64 = survival(4, 2, 2, 2).unwrap();
        assert!(rel_err(p, 1.0 / 6.0) < 1e-13);
        let p: f64 = survival(10, 5, 5, 5).unwrap();
        assert!(rel_err(p, 1.0 / 252.0) < 1e-13);
    }

    #[test]
    fn tails_overlap_at_the_point() {
        // lower(x) + survival(x) = 1 + pmf(x)
        for &(t, n_p, n_q, x) in &[(20u64, 8u64, 11u64, 5u64), (45, 20, 30, 12), (9, 4, 4, 2)] {
            let lo: f64 = lower_tail(t, n_p, n_q, x).unwrap();
            let up: f64 = survival(t, n_p, n_q, x).unwrap();
            let point: f64 = hypergeom_pmf(x, t, n_p, n_q).unwrap();
            assert!((lo + up - 1.0 - point).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_f32_too() {
        let p: f32 = survival(10, 5, 5, 5).unwrap();
        assert!((p - 1.0 / 252.0).abs() < 1e-6);
    }
}
