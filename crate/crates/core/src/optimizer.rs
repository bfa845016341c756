//! Sweeps over the spreading parameter and the optima they expose.

use rayon::prelude::*;

use crate::analytic::{dss_service_rate, expected_download_time};
use crate::error::{Error, Result, Violation, ViolationCode, Violations};
use crate::model::{AccessModel, ServiceModel, SystemConfig};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub alpha: u64,
    pub service_rate: T,
    pub recovery_probability: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T> {
    /// One row per `alpha` in `1..=alpha_max`, in order.
    pub rows: Vec<SweepRow<T>>,
    pub alpha_max: u64,
}

/// Largest feasible `alpha`: `min(floor(N/m), r)` for fixed-size access,
/// `floor(N/m)` for probabilistic access.
pub fn feasible_alpha_max<T: Real>(nodes: u64, m: u64, access: &AccessModel<T>) -> u64 {
    let cap = nodes.checked_div(m).unwrap_or(0);
    match *access {
        AccessModel::FixedSize { r } => cap.min(r),
        AccessModel::Probabilistic { .. } => cap,
    }
}

/// Evaluates the service rate and recovery probability for every feasible `alpha`.
pub fn sweep_alpha<T: Real>(
    nodes: u64,
    m: u64,
    access: &AccessModel<T>,
    service: &ServiceModel<T>,
) -> Result<SweepTable<T>> {
    let alpha_max = feasible_alpha_max(nodes, m, access);
    if alpha_max == 0 {
        // Surface the concrete violations of the smallest allocation.
        crate::model::validate(&SystemConfig::new(nodes, m, 1), access)?;
        return Err(Error::InvalidConfiguration(Violations(vec![Violation::new(
            ViolationCode::AlphaMExceedsN,
            format!("no feasible alpha for N={nodes}, m={m}"),
        )])));
    }
    let rows = (1..=alpha_max)
        .into_par_iter()
        .map(|alpha| {
            let rep = dss_service_rate(&SystemConfig::new(nodes, m, alpha), access, service)?;
            Ok(SweepRow { alpha, service_rate: rep.service_rate, recovery_probability: rep.recovery_probability })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows, alpha_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimumReport {
    pub alpha_star_rate: u64,
    pub alpha_star_recovery: u64,
    /// Whether the smallest-alpha rule had to break a tie for the rate optimum.
    pub rate_tie_broken: bool,
    pub recovery_tie_broken: bool,
}

fn argmax<T: Real>(rows: &[SweepRow<T>], key: impl Fn(&SweepRow<T>) -> T) -> (u64, bool) {
    let mut best = &rows[0];
    let mut tied = false;
    for row in &rows[1..] {
        if key(row) > key(best) {
            best = row;
            tied = false;
        } else if key(row) == key(best) {
            tied = true;
        }
    }
    (best.alpha, tied)
}

/// Argmax of each metric; ties go to the smallest `alpha`.
pub fn optimal_alpha<T: Real>(sweep: &SweepTable<T>) -> Result<OptimumReport> {
    if sweep.rows.is_empty() {
        return Err(Error::EmptySweep);
    }
    let (alpha_star_rate, rate_tie_broken) = argmax(&sweep.rows, |r| r.service_rate);
    let (alpha_star_recovery, recovery_tie_broken) = argmax(&sweep.rows, |r| r.recovery_probability);
    Ok(OptimumReport { alpha_star_rate, alpha_star_recovery, rate_tie_broken, recovery_tie_broken })
}

/// Rows not dominated in both metrics by another row, sorted by `alpha`.
pub fn tradeoff_frontier<T: Real>(sweep: &SweepTable<T>) -> Vec<SweepRow<T>> {
    let dominated = |a: &SweepRow<T>| {
        sweep.rows.iter().any(|b| {
            b.service_rate >= a.service_rate
                && b.recovery_probability >= a.recovery_probability
                && (b.service_rate > a.service_rate || b.recovery_probability > a.recovery_probability)
        })
    };
    sweep.rows.iter().filter(|a| !dominated(a)).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityStep<T> {
    pub alpha: u64,
    /// `T(alpha | alpha m)`: download time when every data node is reached.
    pub time: T,
    /// `T(alpha + 1 | (alpha + 1) m)`.
    pub next_time: T,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport<T> {
    pub steps: Vec<MonotonicityStep<T>>,
    /// True for scaled service, where the decrease is proven; shifted
    /// service only reports the comparison.
    pub asserted: bool,
}

impl<T: Real> MonotonicityReport<T> {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(|s| s.decreasing)
    }

    /// Steps contradicting an asserted decrease.
    pub fn violations(&self) -> Vec<MonotonicityStep<T>> {
        if !self.asserted {
            return Vec::new();
        }
        self.steps.iter().filter(|s| !s.decreasing).copied().collect()
    }
}

/// Compares full-access download times `T(alpha | alpha m)` across
/// consecutive `alpha` in `1..alpha_max`.
pub fn monotonicity_check<T: Real>(service: &ServiceModel<T>, m: u64, alpha_max: u64) -> Result<MonotonicityReport<T>> {
    let steps = (1..alpha_max)
        .map(|alpha| {
            let time = expected_download_time(service, alpha, alpha * m)?;
            let next_time = expected_download_time(service, alpha + 1, (alpha + 1) * m)?;
            Ok(MonotonicityStep { alpha, time, next_time, decreasing: time > next_time })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotonicityReport { steps, asserted: matches!(service, ServiceModel::ScaledExponential { .. }) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Increasing => "non-decreasing",
            Trend::Decreasing => "non-increasing",
            Trend::Constant => "constant",
            Trend::Mixed => "mixed",
        }
    }
}

/// Direction in which a sequence of optima drifts, for annotating sweeps
/// against the open conjectures. Weak monotonicity counts.
pub fn trend(values: &[u64]) -> Trend {
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    match (up, down) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Mixed,
    }
}

/// Direction of a numeric column, strict.
pub fn column_direction<T: Real>(values: &[T]) -> Trend {
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    match (up, down) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Mixed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AccessModel::{FixedSize, Probabilistic};

    const SCALED: ServiceModel<f64> = ServiceModel::ScaledExponential { mu: 1.0 };

    fn rates(t: &SweepTable<f64>) -> Vec<f64> {
        t.rows.iter().map(|r| r.service_rate).collect()
    }

    #[test]
    fn fixed_size_sweeps() {
        let t = sweep_alpha(30, 3, &FixedSize { r: 5 }, &SCALED).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(column_direction(&rates(&t)), Trend::Decreasing);
        let t = sweep_alpha(30, 6, &FixedSize { r: 5 }, &SCALED).unwrap();
        assert_eq!(t.alpha_max, 5);
        assert_eq!(column_direction(&rates(&t)), Trend::Increasing);
        assert_eq!(optimal_alpha(&t).unwrap().alpha_star_recovery, 5);
    }

    #[test]
    fn single_copy_probabilistic_decreases() {
        let t = sweep_alpha(10, 1, &Probabilistic { p: 0.3 }, &SCALED).unwrap();
        assert_eq!(t.rows.len(), 10);
        assert_eq!(column_direction(&rates(&t)), Trend::Decreasing);
        let ps: Vec<f64> = t.rows.iter().map(|r| r.recovery_probability).collect();
        assert_eq!(column_direction(&ps), Trend::Decreasing);
    }

    #[test]
    fn infeasible_sweep() {
        assert!(matches!(sweep_alpha(3, 4, &FixedSize { r: 2 }, &SCALED), Err(Error::InvalidConfiguration(_))));
        assert!(matches!(sweep_alpha(30, 3, &Probabilistic { p: 2.0 }, &SCALED), Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn optima_from_the_figures() {
        let t = sweep_alpha(30, 5, &FixedSize { r: 5 }, &SCALED).unwrap();
        assert_eq!(optimal_alpha(&t).unwrap().alpha_star_rate, 3);
        let t = sweep_alpha(30, 3, &FixedSize { r: 7 }, &SCALED).unwrap();
        assert_eq!(optimal_alpha(&t).unwrap().alpha_star_rate, 2);
        let single = SweepTable {
            rows: vec![SweepRow { alpha: 4, service_rate: 1.0, recovery_probability: 0.5 }],
            alpha_max: 4,
        };
        assert_eq!(optimal_alpha(&single).unwrap().alpha_star_rate, 4);
        let empty: SweepTable<f64> = SweepTable { rows: vec![], alpha_max: 0 };
        assert_eq!(optimal_alpha(&empty), Err(Error::EmptySweep));
    }

    #[test]
    fn ties_go_to_smallest_alpha() {
        let row = |alpha, r, p| SweepRow { alpha, service_rate: r, recovery_probability: p };
        let t = SweepTable { rows: vec![row(1, 1.0, 0.2), row(2, 2.0, 0.9), row(3, 2.0, 0.9)], alpha_max: 3 };
        let opt = optimal_alpha(&t).unwrap();
        assert_eq!((opt.alpha_star_rate, opt.alpha_star_recovery), (2, 2));
        assert!(opt.rate_tie_broken && opt.recovery_tie_broken);
    }

    #[test]
    fn frontier_cases() {
        let row = |alpha, r, p| SweepRow { alpha, service_rate: r, recovery_probability: p };
        let down = SweepTable { rows: vec![row(1, 3.0, 0.9), row(2, 2.0, 0.8), row(3, 1.0, 0.7)], alpha_max: 3 };
        assert_eq!(tradeoff_frontier(&down).iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![1]);
        let cross = SweepTable { rows: vec![row(1, 1.0, 0.9), row(2, 2.0, 0.8), row(3, 3.0, 0.7)], alpha_max: 3 };
        assert_eq!(tradeoff_frontier(&cross).len(), 3);
        let t = sweep_alpha(30, 5, &FixedSize { r: 5 }, &SCALED).unwrap();
        assert_eq!(tradeoff_frontier(&t).iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn monotonicity_examples() {
        let rep = monotonicity_check(&SCALED, 2, 2).unwrap();
        assert_eq!(rep.steps.len(), 1);
        assert!((rep.steps[0].time - 0.5).abs() < 1e-15);
        assert!((rep.steps[0].next_time - 7.0 / 24.0).abs() < 1e-15);
        assert!(rep.asserted && rep.holds());
        let rep = monotonicity_check(&SCALED, 1, 20).unwrap();
        assert!(rep.holds());
        let shifted = ServiceModel::ShiftedExponential { mu: 1.0, delta: 1000.0 };
        let rep = monotonicity_check(&shifted, 3, 10).unwrap();
        assert!(!rep.asserted && rep.holds());
        // Without a shift and one copy the full-access time grows with alpha.
        let tiny = ServiceModel::ShiftedExponential { mu: 1.0, delta: 0.0 };
        let rep = monotonicity_check(&tiny, 1, 5).unwrap();
        assert!(!rep.holds() && rep.violations().is_empty());
    }

    #[test]
    fn rate_scale_does_not_move_the_optimum() {
        for (m, r) in [(3, 5), (5, 5), (3, 8), (4, 9)] {
            let base = optimal_alpha(&sweep_alpha(30, m, &FixedSize { r }, &SCALED).unwrap()).unwrap();
            for mu in [0.01, 0.5, 7.0, 1e3] {
                let svc = ServiceModel::ScaledExponential { mu };
                let other = optimal_alpha(&sweep_alpha(30, m, &FixedSize { r }, &svc).unwrap()).unwrap();
                assert_eq!(base.alpha_star_rate, other.alpha_star_rate);
            }
        }
    }

    #[test]
    fn trend_labels() {
        assert_eq!(trend(&[1, 2, 2, 3]), Trend::Increasing);
        assert_eq!(trend(&[3, 1]), Trend::Decreasing);
        assert_eq!(trend(&[2, 2]), Trend::Constant);
        assert_eq!(trend(&[1, 3, 2]), Trend::Mixed);
    }
}
