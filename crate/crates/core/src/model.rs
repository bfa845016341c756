//! System parameters and the distribution of `phi`, the number of accessed
//! nodes that actually hold data.

use crate::combinatorics::{binomial_pmf, hypergeometric_pmf};
use crate::error::{Result, Violation, ViolationCode, Violations};
use crate::Real;

/// An `alpha` quasi-symmetric allocation: `alpha * m` of the `nodes` hold
/// `k / alpha` coded blocks each, the rest hold nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemConfig {
    /// `N`, the number of storage nodes.
    pub nodes: u64,
    /// `m`, the redundancy multiplier; `m * k` coded blocks are stored.
    pub redundancy: u64,
    /// Spreading parameter. `1` is minimal spreading (plain replication on
    /// `m` nodes), `N / m` is maximal spreading.
    pub alpha: u64,
    /// Optional file block count. Metadata only: no formula depends on it
    /// beyond `alpha | k`.
    pub file_blocks: Option<u64>,
}

impl SystemConfig {
    pub fn new(nodes: u64, redundancy: u64, alpha: u64) -> Self {
        Self { nodes, redundancy, alpha, file_blocks: None }
    }

    pub fn with_file_blocks(mut self, k: u64) -> Self {
        self.file_blocks = Some(k);
        self
    }

    pub fn with_alpha(mut self, alpha: u64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Number of nodes holding data, `alpha * m`.
    pub fn data_nodes(&self) -> u64 {
        self.alpha.saturating_mul(self.redundancy)
    }

    /// Largest feasible spreading parameter, `floor(N / m)`.
    pub fn max_alpha(&self) -> u64 {
        self.nodes.checked_div(self.redundancy).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessModel<T> {
    /// The request reaches a uniformly random `r`-subset of the `N` nodes.
    FixedSize { r: u64 },
    /// The request goes to every data node; each fails independently with
    /// probability `p`.
    Probabilistic { p: T },
}

impl<T: Real> AccessModel<T> {
    pub fn kind(&self) -> AccessKind {
        match self {
            AccessModel::FixedSize { .. } => AccessKind::FixedSize,
            AccessModel::Probabilistic { .. } => AccessKind::Probabilistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    FixedSize,
    Probabilistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceModel<T> {
    /// A node holding `1/alpha` of the file finishes after an exponential
    /// time with mean `1 / (alpha * mu)`.
    ScaledExponential { mu: T },
    /// A node holding `1/alpha` of the file finishes after `delta / alpha`
    /// plus an exponential time with rate `mu`.
    ShiftedExponential { mu: T, delta: T },
}

impl<T: Real> ServiceModel<T> {
    pub fn mu(&self) -> T {
        match *self {
            ServiceModel::ScaledExponential { mu } | ServiceModel::ShiftedExponential { mu, .. } => mu,
        }
    }

    pub fn kind(&self) -> ServiceKind {
        match self {
            ServiceModel::ScaledExponential { .. } => ServiceKind::Scaled,
            ServiceModel::ShiftedExponential { .. } => ServiceKind::Shifted,
        }
    }

    /// Returns every violated invariant (`mu > 0`, `delta >= 0`).
    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        let mu = self.mu();
        if mu <= T::zero() || !mu.is_finite() {
            out.push(Violation::new(ViolationCode::MuNonPositive, format!("mu must be positive and finite, got {mu}")));
        }
        if let ServiceModel::ShiftedExponential { delta, .. } = *self {
            if delta < T::zero() || !delta.is_finite() {
                out.push(Violation::new(
                    ViolationCode::DeltaNegative,
                    format!("delta must be non-negative, got {delta}"),
                ));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Violations(out))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    Scaled,
    Shifted,
}

/// Probability mass of `phi` on `support_min..=support_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiDistribution<T> {
    pub support_min: u64,
    pub support_max: u64,
    pmf: Vec<T>,
}

impl<T: Real> PhiDistribution<T> {
    pub fn prob(&self, phi: u64) -> T {
        if phi < self.support_min || phi > self.support_max {
            T::zero()
        } else {
            self.pmf[(phi - self.support_min) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, T)> + '_ {
        (self.support_min..).zip(self.pmf.iter().copied())
    }

    pub fn total(&self) -> T {
        self.pmf.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(phi, p)| T::from_count(phi) * p).sum()
    }
}

/// Checks the configuration and access model together. Every violation is
/// reported, not just the first.
pub fn validate<T: Real>(config: &SystemConfig, access: &AccessModel<T>) -> Result<(), Violations> {
    use ViolationCode::*;
    let mut out = Vec::new();
    let SystemConfig { nodes, redundancy, alpha, file_blocks } = *config;
    if nodes == 0 {
        out.push(Violation::new(ZeroNodes, "N must be at least 1"));
    }
    if redundancy == 0 {
        out.push(Violation::new(ZeroRedundancy, "m must be at least 1"));
    }
    if alpha == 0 {
        out.push(Violation::new(ZeroAlpha, "alpha must be at least 1"));
    }
    if config.data_nodes() > nodes {
        out.push(Violation::new(AlphaMExceedsN, format!("alpha*m={} exceeds N={nodes}", config.data_nodes())));
    }
    if let Some(k) = file_blocks {
        if alpha > 0 && k % alpha != 0 {
            out.push(Violation::new(KNotDivisible, format!("k={k} is not divisible by alpha={alpha}")));
        }
    }
    match *access {
        AccessModel::FixedSize { r } => {
            if r == 0 || r > nodes {
                out.push(Violation::new(ROutOfRange, format!("r={r} outside [1, N={nodes}]")));
            }
            if alpha > r {
                out.push(Violation::new(AlphaExceedsR, format!("alpha exceeds r (alpha={alpha}, r={r})")));
            }
        }
        AccessModel::Probabilistic { p } => {
            if p.is_nan() || p < T::zero() || p > T::one() {
                out.push(Violation::new(POutOfRange, format!("p={p} outside [0, 1]")));
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(Violations(out))
    }
}

/// Distribution of the number of accessed data-bearing nodes.
///
/// Fixed-size access gives a hypergeometric law (population `N`, `alpha*m`
/// marked, `r` draws); probabilistic access gives `Binomial(alpha*m, 1-p)`
/// over the data nodes only.
pub fn phi_distribution<T: Real>(config: &SystemConfig, access: &AccessModel<T>) -> Result<PhiDistribution<T>> {
    validate(config, access)?;
    let data = config.data_nodes();
    match *access {
        AccessModel::FixedSize { r } => {
            let lo = r.saturating_sub(config.nodes - data);
            let hi = r.min(data);
            let pmf =
                (lo..=hi).map(|phi| hypergeometric_pmf(config.nodes, data, r, phi)).collect::<Result<Vec<T>>>()?;
            Ok(PhiDistribution { support_min: lo, support_max: hi, pmf })
        }
        AccessModel::Probabilistic { p } => {
            let q = T::one() - p;
            let pmf = (0..=data).map(|phi| binomial_pmf(data, phi, q)).collect::<Result<Vec<T>>>()?;
            Ok(PhiDistribution { support_min: 0, support_max: data, pmf })
        }
    }
}
