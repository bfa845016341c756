//! Exact and log-space combinatorial primitives.
//!
//! Every probability mass function here is evaluated in log space and
//! exponentiated once, so populations far beyond the `N = 30` used in the
//! figures do not overflow.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::Real;

/// Neumaier-compensated sum of `terms`, in iteration order.
pub(crate) fn compensated_sum<T: Real>(terms: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

/// Exact `C(n, k)`; zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::ZERO;
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    // acc * (n - k + i) is always divisible by i after the previous steps.
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// Natural log of `C(n, k)`, summed as `ln(1 + (n - k) / i)` terms.
pub fn log_binomial<T: Real>(n: u64, k: i64) -> Result<T> {
    if k < 0 || k as u64 > n {
        return Err(Error::BinomialDomain { n, k });
    }
    let k = (k as u64).min(n - k as u64);
    let rest = T::from_count(n - k);
    Ok(compensated_sum((1..=k).map(|i| (rest / T::from_count(i)).ln_1p())))
}

/// The harmonic number `H_l`, with `H_0 = 0`.
pub fn harmonic<T: Real>(l: u64) -> T {
    // Smallest terms first.
    compensated_sum((1..=l).rev().map(|i| T::one() / T::from_count(i)))
}

/// `H_phi - H_{phi - alpha}`, summed directly over the `alpha` terms of the window.
pub fn harmonic_window<T: Real>(phi: u64, alpha: u64) -> Result<T> {
    if alpha > phi {
        return Err(Error::WindowTooWide { phi, alpha });
    }
    Ok(compensated_sum((phi - alpha + 1..=phi).rev().map(|i| T::one() / T::from_count(i))))
}

/// Probability of drawing exactly `phi` marked items when `draws` items are
/// taken without replacement from `population` items of which `marked` are
/// marked.
pub fn hypergeometric_pmf<T: Real>(population: u64, marked: u64, draws: u64, phi: u64) -> Result<T> {
    if marked > population || draws > population {
        return Err(Error::Hypergeometric { population, marked, draws });
    }
    let unmarked = population - marked;
    if phi > marked || phi > draws || draws - phi > unmarked {
        return Ok(T::zero());
    }
    let log_p = log_binomial::<T>(marked, phi as i64)? + log_binomial::<T>(unmarked, (draws - phi) as i64)?
        - log_binomial::<T>(population, draws as i64)?;
    Ok(log_p.exp().min(T::one()))
}

/// `C(n, phi) q^phi (1 - q)^(n - phi)`, with `0^0 = 1` at `q` in `{0, 1}`.
pub fn binomial_pmf<T: Real>(trials: u64, successes: u64, q: T) -> Result<T> {
    if successes > trials || q.is_nan() || q < T::zero() || q > T::one() {
        return Err(Error::Binomial { trials, successes, q: q.as_f64() });
    }
    if q == T::zero() {
        return Ok(if successes == 0 { T::one() } else { T::zero() });
    }
    if q == T::one() {
        return Ok(if successes == trials { T::one() } else { T::zero() });
    }
    let log_p = log_binomial::<T>(trials, successes as i64)?
        + T::from_count(successes) * q.ln()
        + T::from_count(trials - successes) * (-q).ln_1p();
    Ok(log_p.exp().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(5, 2), big(10));
        for n in [0, 1, 17, 10_000] {
            assert_eq!(binomial(n, 0), big(1));
        }
        assert_eq!(binomial(30, 15), big(155_117_520));
        assert_eq!(binomial(4, -1), big(0));
        assert_eq!(binomial(4, 5), big(0));
    }

    #[test]
    fn binomial_large_n_does_not_overflow() {
        // C(10000, 2) = 10000 * 9999 / 2
        assert_eq!(binomial(10_000, 2), big(49_995_000));
        assert_eq!(binomial(10_000, 9_998), big(49_995_000));
        let mid = binomial(10_000, 5_000);
        assert!(mid.bits() > 9_990);
    }

    #[test]
    fn pascal_rule_exact_up_to_200() {
        for n in 1..=200u64 {
            for k in 0..=n as i64 {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn log_binomial_examples() {
        let v: f64 = log_binomial(5, 2).unwrap();
        assert!((v - std::f64::consts::LN_10).abs() < 1e-12);
        assert_eq!(log_binomial::<f64>(7, 7).unwrap(), 0.0);
        let v: f64 = log_binomial(30, 15).unwrap();
        assert!((v - 18.859_693_581_148_38).abs() < 1e-12);
    }

    #[test]
    fn log_binomial_domain() {
        assert_eq!(log_binomial::<f64>(5, -1), Err(Error::BinomialDomain { n: 5, k: -1 }));
        assert!(log_binomial::<f64>(5, 6).is_err());
    }

    #[test]
    fn log_binomial_matches_exact_up_to_1000() {
        // ln of the exact integer via its top 64 bits and a binary exponent.
        fn ln_big(x: &BigUint) -> f64 {
            let bits = x.bits();
            let shift = bits.saturating_sub(64);
            let top: BigUint = x >> shift;
            let top = top.iter_u64_digits().next().unwrap_or(0) as f64;
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
        for n in (0..=1000u64).step_by(37).chain([1000]) {
            for k in (0..=n).step_by(11).chain([n / 2, n]) {
                let exact = ln_big(&binomial(n, k as i64));
                let got: f64 = log_binomial(n, k as i64).unwrap();
                assert!((got - exact).abs() <= 1e-10, "n={n} k={k} got={got} exact={exact}");
            }
        }
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic::<f64>(0), 0.0);
        assert_eq!(harmonic::<f64>(1), 1.0);
        assert!((harmonic::<f64>(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_at_one_million() {
        // 40-digit reference value of H_{10^6}.
        let reference = 14.392_726_722_865_724;
        assert!((harmonic::<f64>(1_000_000) - reference).abs() <= 1e-12);
    }

    #[test]
    fn harmonic_window_examples() {
        for a in 1..20 {
            assert_eq!(harmonic_window::<f64>(a, a).unwrap(), harmonic::<f64>(a));
            let single: f64 = harmonic_window(a + 5, 1).unwrap();
            assert!((single - 1.0 / (a + 5) as f64).abs() < 1e-16);
        }
        let w: f64 = harmonic_window(4, 2).unwrap();
        assert!((w - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(harmonic_window::<f64>(3, 4), Err(Error::WindowTooWide { phi: 3, alpha: 4 }));
    }

    #[test]
    fn harmonic_window_deep_reference() {
        // H_10000 - H_9963, 40-digit reference.
        let w: f64 = harmonic_window(10_000, 37).unwrap();
        assert!((w - 0.003_706_676_250_485_480_8).abs() < 1e-15);
    }

    #[test]
    fn hypergeometric_examples() {
        let p: f64 = hypergeometric_pmf(4, 2, 2, 1).unwrap();
        assert!((p - 4.0 / 6.0).abs() < 1e-14);
        for (n, k) in [(1, 0), (10, 3), (30, 30), (30, 6)] {
            let p: f64 = hypergeometric_pmf(n, k, n, k).unwrap();
            assert!((p - 1.0).abs() < 1e-14);
        }
        let p: f64 = hypergeometric_pmf(30, 6, 5, 0).unwrap();
        assert!((p - 0.298_261_125_847_332_7).abs() < 1e-14);
        assert_eq!(hypergeometric_pmf::<f64>(30, 6, 5, 6).unwrap(), 0.0);
        assert_eq!(hypergeometric_pmf::<f64>(10, 8, 5, 2).unwrap(), 0.0);
        assert!(hypergeometric_pmf::<f64>(4, 5, 2, 1).is_err());
        assert!(hypergeometric_pmf::<f64>(4, 2, 5, 1).is_err());
    }

    #[test]
    fn binomial_pmf_examples() {
        for n in [0, 1, 7] {
            assert_eq!(binomial_pmf::<f64>(n, n, 1.0).unwrap(), 1.0);
            assert_eq!(binomial_pmf::<f64>(n, 0, 0.0).unwrap(), 1.0);
        }
        assert!((binomial_pmf::<f64>(2, 1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let p: f64 = binomial_pmf(8, 3, 0.7).unwrap();
        assert!((p - 0.046_675_44).abs() < 1e-14);
        assert!(binomial_pmf::<f64>(3, 4, 0.5).is_err());
        assert!(binomial_pmf::<f64>(3, 1, 1.5).is_err());
        assert!(binomial_pmf::<f64>(3, 1, f64::NAN).is_err());
    }

    #[test]
    fn vandermonde_aggregation_is_exact() {
        for n in 0..=40u64 {
            for k in 0..=n {
                for r in 0..=n {
                    let total = (0..=r as i64)
                        .map(|phi| binomial(k, phi) * binomial(n - k, r as i64 - phi))
                        .fold(BigUint::ZERO, |a, b| a + b);
                    assert_eq!(total, binomial(n, r as i64));
                }
            }
        }
    }

    #[test]
    fn f32_harmonic_is_usable() {
        assert!((harmonic::<f32>(4) - 25.0 / 12.0).abs() < 1e-6);
        let p: f32 = hypergeometric_pmf(4, 2, 2, 1).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn hypergeometric_sums_to_one(n in 0u64..400, k_frac in 0.0f64..=1.0, r_frac in 0.0f64..=1.0) {
            let k = (n as f64 * k_frac) as u64;
            let r = (n as f64 * r_frac) as u64;
            let total = compensated_sum((0..=r).map(|phi| hypergeometric_pmf::<f64>(n, k, r, phi).unwrap()));
            prop_assert!((total - 1.0).abs() <= 1e-12, "total={}", total);
        }

        #[test]
        fn binomial_pmf_sums_to_one(n in 0u64..400, q in 0.0f64..=1.0) {
            let total = compensated_sum((0..=n).map(|phi| binomial_pmf::<f64>(n, phi, q).unwrap()));
            prop_assert!((total - 1.0).abs() <= 1e-12, "total={}", total);
        }

        #[test]
        fn window_equals_difference(phi in 1u64..=10_000, a_frac in 0.0f64..=1.0) {
            let alpha = ((phi as f64 * a_frac) as u64).clamp(1, phi);
            let w: f64 = harmonic_window(phi, alpha).unwrap();
            let d = harmonic::<f64>(phi) - harmonic::<f64>(phi - alpha);
            prop_assert!((w - d).abs() <= 1e-12);
        }
    }
}
