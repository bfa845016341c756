//! Seeded Monte Carlo oracle for the analytic formulas.
//!
//! Trials are split into fixed-size blocks. Block `b` draws from a ChaCha8
//! stream seeded with the caller's seed and stream id `b`, and block
//! accumulators are merged in block order, so results are bit-identical for
//! any thread count.
//!
//! The rate estimate is the plug-in `sum_phi p_hat(phi) / T_hat(phi)`, the
//! same functional the closed forms compute. Averaging `1 / T` per trial
//! would estimate a different quantity.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{phi_distribution, validate, AccessModel, PhiDistribution, ServiceModel, SystemConfig};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: u64 = 100_000;
const BLOCK_TRIALS: u64 = 8_192;
/// Strata expected to hold more than this many trials must receive at
/// least [`MIN_STRATUM_SAMPLES`].
const UNDERSAMPLED_EXPECTED: f64 = 10.0;
pub const MIN_STRATUM_SAMPLES: u64 = 30;
const CHI_SQUARED_LEVEL: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationSettings {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SimulationSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, threads: None }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self::new(DEFAULT_TRIALS, DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub per_phi_counts: BTreeMap<u64, u64>,
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Standardized distance from `target`; zero when both the error and the
    /// difference vanish, infinite when only the error does.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
    }
}

fn run_blocks<A, F>(settings: &SimulationSettings, work: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
{
    if settings.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let blocks = settings.trials.div_ceil(BLOCK_TRIALS);
    let run = || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(b);
                let n = BLOCK_TRIALS.min(settings.trials - b * BLOCK_TRIALS);
                work(&mut rng, n)
            })
            .collect::<Vec<A>>()
    };
    match settings.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Exponential variate with the given rate, by inverse transform.
fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Time until `alpha` of `phi` i.i.d. nodes finish. `scratch` is reused.
fn order_statistic<R: Rng>(
    service: &ServiceModel<f64>,
    alpha: u64,
    phi: u64,
    rng: &mut R,
    scratch: &mut Vec<f64>,
) -> f64 {
    let a = alpha as f64;
    scratch.clear();
    match *service {
        ServiceModel::ScaledExponential { mu } => {
            scratch.extend((0..phi).map(|_| exponential(rng, a * mu)));
        }
        ServiceModel::ShiftedExponential { mu, delta } => {
            scratch.extend((0..phi).map(|_| delta / a + exponential(rng, mu)));
        }
    }
    let k = (alpha - 1) as usize;
    *scratch.select_nth_unstable_by(k, f64::total_cmp).1
}

fn draw_phi<R: Rng>(config: &SystemConfig, access: &AccessModel<f64>, rng: &mut R) -> u64 {
    let data = config.data_nodes();
    match *access {
        AccessModel::FixedSize { r } => {
            // Nodes 0..data hold data.
            index::sample(rng, config.nodes as usize, r as usize).iter().filter(|&i| (i as u64) < data).count() as u64
        }
        AccessModel::Probabilistic { p } => (0..data).filter(|_| rng.random::<f64>() >= p).count() as u64,
    }
}

/// Estimates the mean `alpha`-th order statistic of `phi` node times.
pub fn simulate_download_time(
    service: &ServiceModel<f64>,
    alpha: u64,
    phi: u64,
    settings: &SimulationSettings,
) -> Result<SimulationEstimate> {
    if alpha == 0 || alpha > phi {
        return Err(Error::WindowTooWide { phi, alpha });
    }
    service.validate()?;
    let blocks = run_blocks(settings, |rng, n| {
        let mut scratch = Vec::with_capacity(phi as usize);
        let mut m = Moments::default();
        for _ in 0..n {
            m.push(order_statistic(service, alpha, phi, rng, &mut scratch));
        }
        m
    })?;
    let mut total = Moments::default();
    blocks.iter().for_each(|b| total.merge(b));
    Ok(SimulationEstimate {
        mean: total.mean,
        std_error: total.std_error(),
        trials: settings.trials,
        seed: settings.seed,
        per_phi_counts: BTreeMap::from([(phi, settings.trials)]),
    })
}

/// Observed counts of `phi` over simulated accesses.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPhi {
    pub trials: u64,
    pub seed: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl EmpiricalPhi {
    pub fn pmf(&self) -> BTreeMap<u64, f64> {
        self.counts.iter().map(|(&phi, &c)| (phi, c as f64 / self.trials as f64)).collect()
    }

    pub fn prob(&self, phi: u64) -> f64 {
        self.counts.get(&phi).map_or(0.0, |&c| c as f64 / self.trials as f64)
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(&phi, &c)| phi as f64 * c as f64).sum::<f64>() / self.trials as f64
    }
}

fn merge_counts(blocks: &[Vec<u64>]) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for block in blocks {
        for (phi, &c) in block.iter().enumerate() {
            if c > 0 {
                *out.entry(phi as u64).or_insert(0) += c;
            }
        }
    }
    out
}

/// Samples access outcomes and tallies how many data nodes each reached.
pub fn simulate_phi(
    config: &SystemConfig,
    access: &AccessModel<f64>,
    settings: &SimulationSettings,
) -> Result<EmpiricalPhi> {
    validate(config, access)?;
    let slots = config.data_nodes() as usize + 1;
    let blocks = run_blocks(settings, |rng, n| {
        let mut counts = vec![0u64; slots];
        for _ in 0..n {
            counts[draw_phi(config, access, rng) as usize] += 1;
        }
        counts
    })?;
    Ok(EmpiricalPhi { trials: settings.trials, seed: settings.seed, counts: merge_counts(&blocks) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratumEstimate {
    pub phi: u64,
    pub count: u64,
    /// Mean simulated download time given `phi`.
    pub mean_time: f64,
    pub std_error: f64,
}

/// A recoverable stratum that drew too few samples to trust its time estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnderSampledStratum {
    pub phi: u64,
    pub count: u64,
    pub expected_count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DssEstimate {
    pub trials: u64,
    pub seed: u64,
    pub recovery: Estimate,
    pub rate: Estimate,
    /// Strata with `phi >= alpha` that received at least one trial.
    pub strata: Vec<StratumEstimate>,
    pub phi: EmpiricalPhi,
    pub warnings: Vec<UnderSampledStratum>,
}

/// Simulates whole requests: draw the access outcome, then, when at least
/// `alpha` data nodes were reached, the download time.
pub fn simulate_dss(
    config: &SystemConfig,
    access: &AccessModel<f64>,
    service: &ServiceModel<f64>,
    settings: &SimulationSettings,
) -> Result<DssEstimate> {
    service.validate()?;
    let analytic = phi_distribution(config, access)?;
    let alpha = config.alpha;
    let slots = config.data_nodes() as usize + 1;
    let blocks = run_blocks(settings, |rng, n| {
        let mut counts = vec![0u64; slots];
        let mut times = vec![Moments::default(); slots];
        let mut scratch = Vec::with_capacity(slots);
        for _ in 0..n {
            let phi = draw_phi(config, access, rng);
            counts[phi as usize] += 1;
            if phi >= alpha {
                times[phi as usize].push(order_statistic(service, alpha, phi, rng, &mut scratch));
            }
        }
        (counts, times)
    })?;

    let mut times = vec![Moments::default(); slots];
    for (_, block) in &blocks {
        for (acc, m) in times.iter_mut().zip(block) {
            acc.merge(m);
        }
    }
    let counts: Vec<Vec<u64>> = blocks.into_iter().map(|(c, _)| c).collect();
    let phi = EmpiricalPhi { trials: settings.trials, seed: settings.seed, counts: merge_counts(&counts) };

    let n = settings.trials as f64;
    let strata: Vec<StratumEstimate> = times
        .iter()
        .enumerate()
        .skip(alpha as usize)
        .filter(|(_, m)| m.count > 0)
        .map(|(phi, m)| StratumEstimate {
            phi: phi as u64,
            count: m.count,
            mean_time: m.mean,
            std_error: m.std_error(),
        })
        .collect();

    let recovered = strata.iter().map(|s| s.count).sum::<u64>() as f64 / n;
    let recovery = Estimate { value: recovered, std_error: (recovered * (1.0 - recovered) / n).max(0.0).sqrt() };

    // Delta method: multinomial noise in p_hat plus per-stratum noise in T_hat.
    let mut rate = 0.0;
    let mut second = 0.0;
    let mut time_var = 0.0;
    for s in &strata {
        let p = s.count as f64 / n;
        let c = 1.0 / s.mean_time;
        rate += p * c;
        second += p * c * c;
        time_var += (p * c * c * s.std_error).powi(2);
    }
    let multinomial_var = ((second - rate * rate) / n).max(0.0);
    let rate = Estimate { value: rate, std_error: (multinomial_var + time_var).sqrt() };

    let warnings = analytic
        .iter()
        .filter(|&(phi, p)| phi >= alpha && p > UNDERSAMPLED_EXPECTED / n)
        .filter_map(|(phi, p)| {
            let count = times[phi as usize].count;
            (count < MIN_STRATUM_SAMPLES).then_some(UnderSampledStratum { phi, count, expected_count: p * n })
        })
        .collect();

    Ok(DssEstimate { trials: settings.trials, seed: settings.seed, recovery, rate, strata, phi, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    /// 99.9% quantile of the chi-squared law with these degrees of freedom.
    pub critical_value: f64,
    pub passed: bool,
}

/// Pearson goodness of fit of observed `phi` counts against a distribution.
/// Adjacent bins are pooled until each expects at least 5 observations.
pub fn chi_squared_test(observed: &EmpiricalPhi, expected: &PhiDistribution<f64>) -> ChiSquaredTest {
    let n = observed.trials as f64;
    let outside = observed
        .counts
        .keys()
        .any(|&phi| phi < expected.support_min || phi > expected.support_max || expected.prob(phi) == 0.0);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    for (phi, p) in expected.iter() {
        exp_acc += p * n;
        obs_acc += observed.counts.get(&phi).copied().unwrap_or(0) as f64;
        if exp_acc >= 5.0 {
            bins.push((exp_acc, obs_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    if exp_acc > 0.0 || obs_acc > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += exp_acc;
                last.1 += obs_acc;
            }
            None => bins.push((exp_acc, obs_acc)),
        }
    }
    let statistic = if outside {
        f64::INFINITY
    } else {
        bins.iter().map(|&(e, o)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum()
    };
    let dof = bins.len().saturating_sub(1) as u64;
    let critical_value = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.inverse_cdf(CHI_SQUARED_LEVEL)).unwrap_or(f64::NAN)
    };
    // With one bin the statistic is zero up to rounding unless mass fell outside.
    let passed = if dof == 0 { !outside } else { statistic <= critical_value };
    ChiSquaredTest { statistic, degrees_of_freedom: dof, critical_value, passed }
}
