//! Brute-force reference values, computed without the library's
//! distribution code: every access outcome is enumerated explicitly.

#![allow(dead_code)]

/// Mean completion time of the fastest `alpha` out of `phi` nodes.
pub fn order_statistic_time(alpha: u64, phi: u64, mu: f64, delta: Option<f64>) -> f64 {
    let a = alpha as f64;
    let tail: f64 = (phi - alpha + 1..=phi).map(|j| 1.0 / j as f64).sum();
    match delta {
        None => tail / (a * mu),
        Some(d) => d / a + tail / mu,
    }
}

fn set_rate(alpha: u64, phi: u64, mu: f64, delta: Option<f64>) -> f64 {
    if phi < alpha {
        0.0
    } else {
        1.0 / order_statistic_time(alpha, phi, mu, delta)
    }
}

/// `(mu_s, p_s)` averaged over every `r`-subset of `N` nodes, the first
/// `alpha * m` of which hold data.
pub fn enumerate_fixed(nodes: u64, m: u64, alpha: u64, r: u64, mu: f64, delta: Option<f64>) -> (f64, f64) {
    let data_mask: u32 = (1u32 << (alpha * m)) - 1;
    let (mut rate, mut hits, mut subsets) = (0.0, 0u64, 0u64);
    for mask in 0u32..(1 << nodes) {
        if mask.count_ones() as u64 != r {
            continue;
        }
        subsets += 1;
        let phi = (mask & data_mask).count_ones() as u64;
        rate += set_rate(alpha, phi, mu, delta);
        hits += (phi >= alpha) as u64;
    }
    (rate / subsets as f64, hits as f64 / subsets as f64)
}

/// `(mu_s, p_s)` averaged over all `2^N` failure patterns, each node
/// failing independently with probability `p`.
pub fn enumerate_prob(nodes: u64, m: u64, alpha: u64, p: f64, mu: f64, delta: Option<f64>) -> (f64, f64) {
    let data_mask: u32 = (1u32 << (alpha * m)) - 1;
    let (mut rate, mut recovery) = (0.0, 0.0);
    for alive in 0u32..(1 << nodes) {
        let up = alive.count_ones() as i32;
        let weight = (1.0 - p).powi(up) * p.powi(nodes as i32 - up);
        let phi = (alive & data_mask).count_ones() as u64;
        rate += weight * set_rate(alpha, phi, mu, delta);
        if phi >= alpha {
            recovery += weight;
        }
    }
    (rate, recovery)
}
