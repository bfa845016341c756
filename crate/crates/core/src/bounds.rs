//! Parameter regions where spreading provably loses to, or beats, minimal
//! spreading.
//!
//! Sandwiching the per-set rate between linear functions of `phi` and
//! collapsing the weighted sums with Vandermonde's convolution (fixed-size
//! access) or the binomial theorem (probabilistic access) gives explicit
//! thresholds. Below the low threshold on `r` (above the high threshold on
//! `p`) `mu_s(alpha) < mu_s(1)`; past the other threshold `mu_s(alpha) >
//! mu_s(1)`. The band in between is undecided.
//!
//! All thresholds take an `(alpha - 1)`-th root, so `alpha >= 2` is required.

use std::fmt;

use crate::analytic::dss_service_rate;
use crate::combinatorics::log_binomial;
use crate::error::{Error, Result, Violation, ViolationCode, Violations};
use crate::model::{AccessModel, ServiceModel, SystemConfig};
use crate::Real;

/// Default spacing of the `p` grid used by [`verify_region`].
pub const DEFAULT_P_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionAxis {
    /// Regions over `r`, the number of accessed nodes; domain `[alpha, N]`.
    AccessedNodes,
    /// Regions over `p`, the node failure probability; domain `[0, 1]`.
    FailureProbability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl<T: Real> Interval<T> {
    pub fn closed(lower: T, upper: T) -> Self {
        Self { lower, upper, lower_closed: true, upper_closed: true }
    }

    pub fn contains(&self, x: T) -> bool {
        let above = if self.lower_closed { x >= self.lower } else { x > self.lower };
        let below = if self.upper_closed { x <= self.upper } else { x < self.upper };
        above && below
    }

    pub fn contains_interior(&self, x: T) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper || (self.lower == self.upper && self.lower_closed && self.upper_closed))
    }

    /// Integers inside the interval, honouring open and closed ends.
    pub fn integers(&self) -> Vec<u64> {
        if self.is_empty() || self.upper < T::zero() {
            return Vec::new();
        }
        let lo = self.lower.max(T::zero()).ceil().to_u64().unwrap_or(0);
        let hi = self.upper.floor().to_u64().unwrap_or(0);
        (lo..=hi).filter(|&r| self.contains(T::from_count(r))).collect()
    }
}

impl<T: fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_closed { '[' } else { '(' };
        let close = if self.upper_closed { ']' } else { ')' };
        write!(f, "{open}{}, {}{close}", self.lower, self.upper)
    }
}

/// A threshold together with the part of the domain it certifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    /// The raw threshold, before clamping to the domain.
    pub threshold: T,
    /// `None` when the certified interval is empty inside the domain.
    pub interval: Option<Interval<T>>,
}

impl<T> Region<T> {
    pub fn exists(&self) -> bool {
        self.interval.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionSide {
    /// `mu_s(alpha) < mu_s(1)`.
    Worse,
    /// `mu_s(alpha) > mu_s(1)`.
    Better,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport<T> {
    pub alpha: u64,
    pub axis: RegionAxis,
    pub domain: Interval<T>,
    /// Where `mu_s(alpha) < mu_s(1)` is guaranteed.
    pub worse: Region<T>,
    /// Where `mu_s(alpha) > mu_s(1)` is guaranteed.
    pub better: Region<T>,
    /// The undecided part of the domain between the two regions.
    pub gap: Option<Interval<T>>,
}

impl<T: Real> RegionReport<T> {
    pub fn region(&self, side: RegionSide) -> &Region<T> {
        match side {
            RegionSide::Worse => &self.worse,
            RegionSide::Better => &self.better,
        }
    }

    pub fn overlaps(&self) -> bool {
        match (self.worse.interval, self.better.interval) {
            (Some(w), Some(b)) => {
                let (lo, hi) = match self.axis {
                    RegionAxis::AccessedNodes => (w, b),
                    RegionAxis::FailureProbability => (b, w),
                };
                lo.upper > hi.lower || (lo.upper == hi.lower && lo.upper_closed && hi.lower_closed)
            }
            _ => false,
        }
    }
}

/// `[d.lower, t)` clipped to the domain.
fn low_part<T: Real>(domain: Interval<T>, t: T) -> Option<Interval<T>> {
    (t > domain.lower).then(|| Interval {
        lower: domain.lower,
        lower_closed: true,
        upper: t.min(domain.upper),
        upper_closed: t > domain.upper,
    })
}

/// `(t, d.upper]` clipped to the domain.
fn high_part<T: Real>(domain: Interval<T>, t: T) -> Option<Interval<T>> {
    (t < domain.upper).then(|| Interval {
        lower: t.max(domain.lower),
        lower_closed: t < domain.lower,
        upper: domain.upper,
        upper_closed: true,
    })
}

fn gap_between<T: Real>(
    domain: Interval<T>,
    low: Option<Interval<T>>,
    high: Option<Interval<T>>,
) -> Option<Interval<T>> {
    let (lower, lower_closed) = low.map_or((domain.lower, true), |i| (i.upper, !i.upper_closed));
    let (upper, upper_closed) = high.map_or((domain.upper, true), |i| (i.lower, !i.lower_closed));
    let gap = Interval { lower, upper, lower_closed, upper_closed };
    (!gap.is_empty()).then_some(gap)
}

fn build<T: Real>(alpha: u64, axis: RegionAxis, domain: Interval<T>, worse_t: T, better_t: T) -> RegionReport<T> {
    let (worse, better, gap) = match axis {
        RegionAxis::AccessedNodes => {
            let w = low_part(domain, worse_t);
            let b = high_part(domain, better_t);
            (w, b, gap_between(domain, w, b))
        }
        RegionAxis::FailureProbability => {
            let w = high_part(domain, worse_t);
            let b = low_part(domain, better_t);
            (w, b, gap_between(domain, b, w))
        }
    };
    RegionReport {
        alpha,
        axis,
        domain,
        worse: Region { threshold: worse_t, interval: worse },
        better: Region { threshold: better_t, interval: better },
        gap,
    }
}

/// `x^(1 / (alpha - 1))` given `ln x`.
fn root<T: Real>(ln_x: T, alpha: u64) -> T {
    (ln_x / T::from_count(alpha - 1)).exp()
}

fn check_common<T: Real>(alpha: u64, redundancy: u64, service: &ServiceModel<T>) -> Result<()> {
    if alpha < 2 {
        return Err(Error::AlphaBelowTwo(alpha));
    }
    if redundancy == 0 {
        return Err(Violations(vec![Violation::new(ViolationCode::ZeroRedundancy, "m must be at least 1")]).into());
    }
    service.validate()?;
    Ok(())
}

fn check_nodes(nodes: u64, redundancy: u64, alpha: u64) -> Result<()> {
    let config = SystemConfig::new(nodes, redundancy, alpha);
    if config.data_nodes() > nodes {
        let v =
            Violation::new(ViolationCode::AlphaMExceedsN, format!("alpha*m={} exceeds N={nodes}", config.data_nodes()));
        return Err(Violations(vec![v]).into());
    }
    Ok(())
}

/// `ln` of the factor whose `(alpha-1)`-th root bounds the loss side:
/// scaled `1 / (alpha C(am-1, a-1))`, shifted
/// `(dm + a) / (a (dm m + 1) C(am-1, a-1))` with `dm = delta * mu`.
fn ln_loss_factor<T: Real>(service: &ServiceModel<T>, m: u64, alpha: u64) -> Result<T> {
    let a = T::from_count(alpha);
    let ln_c: T = log_binomial(alpha * m - 1, (alpha - 1) as i64)?;
    Ok(match *service {
        ServiceModel::ScaledExponential { .. } => -(a.ln() + ln_c),
        ServiceModel::ShiftedExponential { mu, delta } => {
            let dm = delta * mu;
            (dm + a).ln() - a.ln() - (dm * T::from_count(m) + T::one()).ln() - ln_c
        }
    })
}

/// `ln` of the factor whose `(alpha-1)`-th root bounds the gain side:
/// scaled `m / (am - a + 1)`, shifted
/// `m (dm (am - a + 1) + a^2) / (a (dm + 1) (am - a + 1))`.
fn ln_gain_factor<T: Real>(service: &ServiceModel<T>, m: u64, alpha: u64) -> T {
    let a = T::from_count(alpha);
    let mt = T::from_count(m);
    let spread = T::from_count(alpha * m - alpha + 1);
    match *service {
        ServiceModel::ScaledExponential { .. } => mt.ln() - spread.ln(),
        ServiceModel::ShiftedExponential { mu, delta } => {
            let dm = delta * mu;
            mt.ln() + (dm * spread + a * a).ln() - a.ln() - (dm + T::one()).ln() - spread.ln()
        }
    }
}

fn fixed_regions<T: Real>(nodes: u64, m: u64, alpha: u64, service: &ServiceModel<T>) -> Result<RegionReport<T>> {
    check_common(alpha, m, service)?;
    check_nodes(nodes, m, alpha)?;
    let n = T::from_count(nodes);
    let a = T::from_count(alpha);
    let one = T::one();
    let r_low = one + root(ln_loss_factor(service, m, alpha)?, alpha) * (n - one);
    let r_high = root(ln_gain_factor(service, m, alpha), alpha) * (n - a + one) + a - one;
    Ok(build(alpha, RegionAxis::AccessedNodes, Interval::closed(a, n), r_low, r_high))
}

fn prob_regions<T: Real>(m: u64, alpha: u64, service: &ServiceModel<T>) -> Result<RegionReport<T>> {
    check_common(alpha, m, service)?;
    let one = T::one();
    let p_worse = one - root(ln_loss_factor(service, m, alpha)?, alpha);
    let p_better = one - root(ln_gain_factor(service, m, alpha), alpha);
    Ok(build(alpha, RegionAxis::FailureProbability, Interval::closed(T::zero(), one), p_worse, p_better))
}

/// Regions over `r` for fixed-size access and scaled exponential service.
pub fn fixed_scaled_regions<T: Real>(nodes: u64, m: u64, mu: T, alpha: u64) -> Result<RegionReport<T>> {
    fixed_regions(nodes, m, alpha, &ServiceModel::ScaledExponential { mu })
}

/// Regions over `p` for probabilistic access and scaled exponential service.
pub fn prob_scaled_regions<T: Real>(m: u64, mu: T, alpha: u64) -> Result<RegionReport<T>> {
    prob_regions(m, alpha, &ServiceModel::ScaledExponential { mu })
}

/// Regions over `r` for fixed-size access and shifted exponential service.
pub fn fixed_shifted_regions<T: Real>(nodes: u64, m: u64, mu: T, delta: T, alpha: u64) -> Result<RegionReport<T>> {
    fixed_regions(nodes, m, alpha, &ServiceModel::ShiftedExponential { mu, delta })
}

/// Regions over `p` for probabilistic access and shifted exponential service.
pub fn prob_shifted_regions<T: Real>(m: u64, mu: T, delta: T, alpha: u64) -> Result<RegionReport<T>> {
    prob_regions(m, alpha, &ServiceModel::ShiftedExponential { mu, delta })
}

/// Dispatches to the four region computations. `nodes` is only read for
/// fixed-size access.
pub fn regions<T: Real>(
    nodes: Option<u64>,
    m: u64,
    alpha: u64,
    fixed_size: bool,
    service: &ServiceModel<T>,
) -> Result<RegionReport<T>> {
    if fixed_size {
        let nodes = nodes.ok_or_else(|| {
            Error::InvalidConfiguration(Violations(vec![Violation::new(
                ViolationCode::ZeroNodes,
                "N is required for fixed-size access",
            )]))
        })?;
        fixed_regions(nodes, m, alpha, service)
    } else {
        prob_regions(m, alpha, service)
    }
}

/// The system family a [`RegionReport`] is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFamily {
    FixedSize { nodes: u64, redundancy: u64 },
    Probabilistic { redundancy: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counterexample<T> {
    pub side: RegionSide,
    /// The `r` or `p` value checked.
    pub at: T,
    pub rate_alpha: T,
    pub rate_one: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerification<T> {
    /// Number of `(side, point)` comparisons made.
    pub checked: usize,
    pub counterexamples: Vec<Counterexample<T>>,
}

impl<T> RegionVerification<T> {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Evaluates both rates at every integer `r` in each region, or at every
/// `p` grid point strictly inside each region, and reports any point where
/// the claimed ordering fails. Empty regions are vacuously verified.
///
/// Open `p` ends are skipped because at `p = 1` both rates are zero.
pub fn verify_region<T: Real>(
    report: &RegionReport<T>,
    family: RegionFamily,
    service: &ServiceModel<T>,
    p_step: T,
) -> Result<RegionVerification<T>> {
    let (config, fixed_size) = match (family, report.axis) {
        (RegionFamily::FixedSize { nodes, redundancy }, RegionAxis::AccessedNodes) => {
            (SystemConfig::new(nodes, redundancy, report.alpha), true)
        }
        (RegionFamily::Probabilistic { redundancy }, RegionAxis::FailureProbability) => {
            (SystemConfig::new(redundancy * report.alpha, redundancy, report.alpha), false)
        }
        _ => return Err(Error::AxisMismatch),
    };
    let steps = (T::one() / p_step).round().to_u64().unwrap_or(1).max(1);
    let samples = |interval: &Interval<T>| -> Vec<(T, AccessModel<T>)> {
        if fixed_size {
            interval.integers().into_iter().map(|r| (T::from_count(r), AccessModel::FixedSize { r })).collect()
        } else {
            (0..=steps)
                .map(|k| T::from_count(k) / T::from_count(steps))
                .filter(|&p| interval.contains_interior(p))
                .map(|p| (p, AccessModel::Probabilistic { p }))
                .collect()
        }
    };
    let baseline = config.with_alpha(1);
    let mut checked = 0;
    let mut counterexamples = Vec::new();
    for side in [RegionSide::Worse, RegionSide::Better] {
        let Some(interval) = report.region(side).interval else { continue };
        for (at, access) in samples(&interval) {
            let rate_alpha = dss_service_rate(&config, &access, service)?.service_rate;
            let rate_one = dss_service_rate(&baseline, &access, service)?.service_rate;
            let holds = match side {
                RegionSide::Worse => rate_alpha < rate_one,
                RegionSide::Better => rate_alpha > rate_one,
            };
            checked += 1;
            if !holds {
                counterexamples.push(Counterexample { side, at, rate_alpha, rate_one });
            }
        }
    }
    Ok(RegionVerification { checked, counterexamples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(x: f64, want: f64, tol: f64) -> bool {
        (x - want).abs() <= tol
    }

    #[test]
    fn fixed_scaled_reference_parameters() {
        let rep = fixed_scaled_regions(30, 2, 1.0, 4).unwrap();
        let r_low = 1.0 + 29.0 / 140f64.powf(1.0 / 3.0);
        let r_high = 0.4f64.powf(1.0 / 3.0) * 27.0 + 3.0;
        assert!(near(rep.worse.threshold, r_low, 1e-12));
        assert!(near(rep.better.threshold, r_high, 1e-12));
        let w = rep.worse.interval.unwrap();
        assert_eq!((w.lower, w.lower_closed, w.upper_closed), (4.0, true, false));
        let b = rep.better.interval.unwrap();
        assert_eq!((b.upper, b.lower_closed, b.upper_closed), (30.0, false, true));
        assert_eq!(w.integers(), vec![4, 5, 6]);
        assert_eq!(b.integers(), (23..=30).collect::<Vec<_>>());
        let g = rep.gap.unwrap();
        assert!(g.lower_closed && g.upper_closed && near(g.lower, r_low, 1e-12));
        assert!(!rep.overlaps());
    }

    #[test]
    fn fixed_scaled_missing_worse_region() {
        let rep = fixed_scaled_regions(30, 3, 1.0, 5).unwrap();
        assert!(!rep.worse.exists());
        assert!(rep.worse.threshold < 5.0);
        assert!(near(rep.better.threshold, 22.7, 0.15));
        assert_eq!(rep.gap.unwrap().lower, 5.0);
    }

    #[test]
    fn alpha_one_is_rejected() {
        assert_eq!(fixed_scaled_regions(30, 2, 1.0, 1), Err(Error::AlphaBelowTwo(1)));
        assert_eq!(prob_scaled_regions(2, 1.0, 1), Err(Error::AlphaBelowTwo(1)));
        assert_eq!(fixed_shifted_regions(30, 2, 1.0, 3.0, 1), Err(Error::AlphaBelowTwo(1)));
        assert_eq!(prob_shifted_regions(2, 1.0, 3.0, 1), Err(Error::AlphaBelowTwo(1)));
        assert!(matches!(fixed_scaled_regions(30, 8, 1.0, 4), Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn prob_scaled_reference_parameters() {
        let rep = prob_scaled_regions(2, 1.0, 4).unwrap();
        assert!(near(rep.worse.threshold, 1.0 - 140f64.powf(-1.0 / 3.0), 1e-12));
        assert!(near(rep.better.threshold, 1.0 - 0.4f64.powf(1.0 / 3.0), 1e-12));
        let w = rep.worse.interval.unwrap();
        assert!(!w.lower_closed && w.upper_closed && w.upper == 1.0);
        let b = rep.better.interval.unwrap();
        assert!(b.lower_closed && !b.upper_closed && b.lower == 0.0);
    }

    #[test]
    fn prob_scaled_single_copy_has_no_better_region() {
        let rep = prob_scaled_regions(1, 1.0, 2).unwrap();
        assert!(near(rep.better.threshold, 0.0, 1e-15));
        assert!(!rep.better.exists());
    }

    #[test]
    fn fixed_shifted_reference_parameters() {
        let rep = fixed_shifted_regions(30, 2, 1.0, 10.0, 4).unwrap();
        let r_low = (14.0f64 / 2940.0).powf(1.0 / 3.0) * 29.0 + 1.0;
        let r_high = (132.0f64 / 220.0).powf(1.0 / 3.0) * 27.0 + 3.0;
        assert!(near(rep.worse.threshold, r_low, 1e-12));
        assert!(near(rep.better.threshold, r_high, 1e-12));
        let rep = fixed_shifted_regions(30, 2, 1.0, 1.0, 4).unwrap();
        assert!(rep.better.threshold > 30.0 && !rep.better.exists());
        assert!(rep.worse.exists());
        assert_eq!(rep.gap.unwrap().upper, 30.0);
        // Inverted low end reported as missing.
        let rep = fixed_shifted_regions(30, 3, 1.0, 10.0, 6).unwrap();
        assert!(!rep.worse.exists());
        assert!(near(rep.better.threshold, 27.4, 0.15));
    }

    #[test]
    fn prob_shifted_reference_parameters() {
        let rep = prob_shifted_regions(2, 1.0, 10.0, 4).unwrap();
        assert!(near(rep.worse.threshold, 1.0 - (14.0f64 / 2940.0).powf(1.0 / 3.0), 1e-12));
        assert!(near(rep.better.threshold, 1.0 - 0.6f64.powf(1.0 / 3.0), 1e-12));
    }

    #[test]
    fn prob_shifted_clamps_negative_threshold() {
        // With no shift and a single copy the gain factor exceeds one.
        let rep = prob_shifted_regions(1, 1.0, 0.0, 3).unwrap();
        assert!(rep.better.threshold <= 0.0);
        assert!(!rep.better.exists());
    }

    #[test]
    fn integer_members_of_interval() {
        let i = Interval { lower: 4.0, upper: 6.0, lower_closed: false, upper_closed: false };
        assert_eq!(i.integers(), vec![5]);
        let i = Interval { lower: 4.0, upper: 4.0, lower_closed: true, upper_closed: true };
        assert_eq!(i.integers(), vec![4]);
        assert!(!i.is_empty());
        let i = Interval { lower: 4.0, upper: 4.0, lower_closed: true, upper_closed: false };
        assert!(i.is_empty());
        assert_eq!(
            format!("{}", Interval { lower: 4.0, upper: 6.5, lower_closed: true, upper_closed: false }),
            "[4, 6.5)"
        );
    }

    #[test]
    fn verify_reference_fixed_scaled() {
        let svc = ServiceModel::ScaledExponential { mu: 1.0 };
        let rep = fixed_scaled_regions(30, 2, 1.0, 4).unwrap();
        let v =
            verify_region(&rep, RegionFamily::FixedSize { nodes: 30, redundancy: 2 }, &svc, DEFAULT_P_STEP).unwrap();
        assert!(v.passed());
        assert_eq!(v.checked, 3 + 8);
    }

    #[test]
    fn verify_empty_regions_vacuously() {
        let svc = ServiceModel::ScaledExponential { mu: 1.0 };
        let rep = prob_scaled_regions(1, 1.0, 2).unwrap();
        let v = verify_region(&rep, RegionFamily::Probabilistic { redundancy: 1 }, &svc, 0.01).unwrap();
        assert!(v.passed());
        let mut none = rep.clone();
        none.worse.interval = None;
        none.better.interval = None;
        let v = verify_region(&none, RegionFamily::Probabilistic { redundancy: 1 }, &svc, 0.01).unwrap();
        assert_eq!(v.checked, 0);
        assert!(v.passed());
        assert_eq!(
            verify_region(&rep, RegionFamily::FixedSize { nodes: 30, redundancy: 1 }, &svc, 0.01),
            Err(Error::AxisMismatch)
        );
    }

    #[test]
    fn verify_detects_a_planted_counterexample() {
        let svc = ServiceModel::ScaledExponential { mu: 1.0 };
        let mut rep = fixed_scaled_regions(30, 2, 1.0, 4).unwrap();
        // Claim the whole domain is worse; large r contradicts it.
        rep.worse.interval = Some(Interval::closed(4.0, 30.0));
        let v = verify_region(&rep, RegionFamily::FixedSize { nodes: 30, redundancy: 2 }, &svc, 0.01).unwrap();
        assert!(!v.passed());
        assert!(v.counterexamples.iter().all(|c| c.side == RegionSide::Worse && c.rate_alpha >= c.rate_one));
    }

    #[test]
    fn thresholds_are_affine_in_n() {
        for (m, alpha) in [(2, 2), (3, 4), (5, 3)] {
            let t = |n: u64| {
                let r = fixed_scaled_regions(n, m, 1.0, alpha).unwrap();
                (r.worse.threshold, r.better.threshold)
            };
            let (a, b, c) = (t(40), t(60), t(80));
            assert!(near(b.0 - a.0, c.0 - b.0, 1e-10));
            assert!(near(b.1 - a.1, c.1 - b.1, 1e-10));
        }
    }

    #[test]
    fn regions_never_overlap_and_stay_in_domain() {
        for n in 4..=40u64 {
            for m in 1..=6u64 {
                for alpha in 2..=6u64 {
                    if alpha * m > n {
                        continue;
                    }
                    for delta in [None, Some(0.0), Some(1.0), Some(3.0), Some(10.0)] {
                        let rep = match delta {
                            None => fixed_scaled_regions(n, m, 1.0, alpha).unwrap(),
                            Some(d) => fixed_shifted_regions(n, m, 1.0, d, alpha).unwrap(),
                        };
                        assert!(!rep.overlaps(), "{n} {m} {alpha} {delta:?}");
                        for i in [rep.worse.interval, rep.better.interval, rep.gap].into_iter().flatten() {
                            assert!(i.lower >= alpha as f64 && i.upper <= n as f64);
                        }
                    }
                }
            }
        }
    }
}
