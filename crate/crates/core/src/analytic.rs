//! Closed-form download times, per-set service rates, recovery probability
//! and the system service rate.
//!
//! With `phi` data nodes reached, a request finishes when the `alpha`-th of
//! the `phi` node downloads completes. For exponential node times the mean of
//! that order statistic is a harmonic window `H_phi - H_{phi-alpha}`, which
//! gives
//!
//! ```text
//! scaled:  T(alpha | phi) = (H_phi - H_{phi-alpha}) / (alpha mu)
//! shifted: T(alpha | phi) = delta / alpha + (H_phi - H_{phi-alpha}) / mu
//! ```
//!
//! The system rate weights `1 / T(alpha | phi)` by the law of `phi`,
//! counting only `phi >= alpha` (failed recoveries serve nothing).

use crate::combinatorics::harmonic_window;
use crate::error::{Error, Result};
use crate::model::{phi_distribution, AccessModel, ServiceModel, SystemConfig};
use crate::Real;

/// Terms with probability below this are dropped from the rate sum.
const NEGLIGIBLE_MASS: f64 = 1e-300;

/// One `phi` stratum of a [`RateReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiTerm<T> {
    pub phi: u64,
    pub probability: T,
    /// Conditional rate `1 / T(alpha | phi)`.
    pub set_rate: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    /// System service rate, `sum P(phi) * set_rate(phi)` over `phi >= alpha`.
    pub service_rate: T,
    /// Probability that at least `alpha` data nodes are reached.
    pub recovery_probability: T,
    /// Strata with `phi >= alpha`, in increasing `phi`.
    pub per_phi: Vec<PhiTerm<T>>,
}

/// Mean time until `alpha` of `phi` data nodes have delivered their blocks.
pub fn expected_download_time<T: Real>(service: &ServiceModel<T>, alpha: u64, phi: u64) -> Result<T> {
    if alpha == 0 || alpha > phi {
        return Err(Error::WindowTooWide { phi, alpha });
    }
    service.validate()?;
    let window: T = harmonic_window(phi, alpha)?;
    let a = T::from_count(alpha);
    Ok(match *service {
        ServiceModel::ScaledExponential { mu } => window / (a * mu),
        ServiceModel::ShiftedExponential { mu, delta } => delta / a + window / mu,
    })
}

/// Service rate of an accessed set with `phi` data nodes: `1 / T(alpha | phi)`.
pub fn set_service_rate<T: Real>(service: &ServiceModel<T>, alpha: u64, phi: u64) -> Result<T> {
    Ok(expected_download_time(service, alpha, phi)?.recip())
}

/// Probability that the accessed set contains at least `alpha` data nodes.
pub fn recovery_probability<T: Real>(config: &SystemConfig, access: &AccessModel<T>) -> Result<T> {
    let dist = phi_distribution(config, access)?;
    Ok(dist.iter().filter(|&(phi, _)| phi >= config.alpha).map(|(_, p)| p).sum())
}

/// Expected service rate of the system together with the recovery
/// probability and the per-`phi` breakdown behind both.
pub fn dss_service_rate<T: Real>(
    config: &SystemConfig,
    access: &AccessModel<T>,
    service: &ServiceModel<T>,
) -> Result<RateReport<T>> {
    service.validate()?;
    let dist = phi_distribution(config, access)?;
    let floor = T::lit(NEGLIGIBLE_MASS);
    let per_phi = dist
        .iter()
        .filter(|&(phi, p)| phi >= config.alpha && p >= floor && p > T::zero())
        .map(|(phi, probability)| {
            Ok(PhiTerm { phi, probability, set_rate: set_service_rate(service, config.alpha, phi)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let service_rate = per_phi.iter().map(|t| t.probability * t.set_rate).sum();
    let recovery_probability = per_phi.iter().map(|t| t.probability).sum();
    Ok(RateReport { service_rate, recovery_probability, per_phi })
}
