//! Test statistics over a [`SampleBatch`] and their uniform-case expectations.

use serde::{Deserialize, Serialize};

use crate::dist::SampleBatch;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Relative mass below which binomial terms are dropped.
pub const BINOMIAL_TRUNCATION: f64 = 1e-18;

/// The empirical TV distance to uniform, kept together with its exact
/// rational form `numerator / denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvStatistic {
    pub value: f64,
    /// `sum_i |n X_i - m|`.
    pub numerator: u128,
    /// `2 m n`.
    pub denominator: u128,
}

/// `S = (1/2) sum_i |X_i/m - 1/n|`.
///
/// Accumulated exactly in integers as `sum_i |n X_i - m| / (2 m n)`, so the
/// only rounding is the final division.
pub fn tv_statistic(batch: &SampleBatch) -> Result<TvStatistic> {
    let m = batch.m() as u128;
    if m == 0 {
        return Err(Error::InvalidParam("TV statistic needs m >= 1".into()));
    }
    let n = batch.n() as u128;
    let numerator: u128 = batch
        .counts()
        .iter()
        .map(|&x| (n * x as u128).abs_diff(m))
        .sum();
    let denominator = 2 * m * n;
    Ok(TvStatistic {
        value: numerator as f64 / denominator as f64,
        numerator,
        denominator,
    })
}

/// Number of domain elements never observed.
pub fn empty_bucket_count(batch: &SampleBatch) -> usize {
    batch.counts().iter().filter(|&&x| x == 0).count()
}

/// Pairwise collisions `sum_i X_i (X_i - 1) / 2`.
pub fn collision_statistic(batch: &SampleBatch) -> u128 {
    batch
        .counts()
        .iter()
        .map(|&x| {
            let x = x as u128;
            x * x.saturating_sub(1) / 2
        })
        .sum()
}

/// `sum_i ((X_i - rate/n)^2 - X_i) / (rate/n)` for a Poissonized batch drawn
/// at `rate`.
pub fn chi2_statistic(batch: &SampleBatch, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParam(format!("chi-square rate {rate} must be positive")));
    }
    let expected = rate / batch.n() as f64;
    let mut acc = CompensatedSum::new();
    for &x in batch.counts() {
        let x = x as f64;
        let d = x - expected;
        acc.add((d * d - x) / expected);
    }
    Ok(acc.value())
}

/// Exact `E[S]` for `m` samples from the uniform distribution on `[n]`.
///
/// By linearity this is `(n / 2m) E|K - m/n|` with `K ~ Binomial(m, 1/n)`.
/// Binomial weights are generated relative to the mode by the ratio
/// recurrence `w(k+1)/w(k) = (m-k)/(k+1) * p/(1-p)`, stopped once they fall
/// below [`BINOMIAL_TRUNCATION`], and the expectation is taken as a ratio of
/// sums so no absolute normalizing constant is ever evaluated.
pub fn exact_uniform_mean(n: usize, m: u64) -> Result<f64> {
    if n < 2 || m < 1 {
        return Err(Error::InvalidParam(format!(
            "uniform mean needs n >= 2 and m >= 1, got n = {n}, m = {m}"
        )));
    }
    let odds = 1.0 / (n as f64 - 1.0);
    // |n k - m| / n without rounding in the subtraction.
    let dev = |k: u64| (n as u128 * k as u128).abs_diff(m as u128) as f64 / n as f64;
    let mode = (m + 1) / n as u64;

    let mut mass = CompensatedSum::new();
    let mut moment = CompensatedSum::new();
    mass.add(1.0);
    moment.add(dev(mode));
    let mut w = 1.0f64;
    for k in mode..m {
        w *= (m - k) as f64 / (k + 1) as f64 * odds;
        if w < BINOMIAL_TRUNCATION {
            break;
        }
        mass.add(w);
        moment.add(w * dev(k + 1));
    }
    w = 1.0;
    for k in (1..=mode).rev() {
        w *= k as f64 / (m - k + 1) as f64 / odds;
        if w < BINOMIAL_TRUNCATION {
            break;
        }
        mass.add(w);
        moment.add(w * dev(k - 1));
    }
    Ok(n as f64 / (2.0 * m as f64) * (moment.value() / mass.value()))
}

/// Which case of the expectation-gap bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRegime {
    /// `m <= n`
    Sublinear,
    /// `n < m <= n / xi^2`
    Superlinear,
    /// `m > n / xi^2`
    Superlearning,
}

impl GapRegime {
    pub fn classify(n: usize, m: u64, xi: f64) -> Self {
        let (nf, mf) = (n as f64, m as f64);
        if m <= n as u64 {
            GapRegime::Sublinear
        } else if mf * xi * xi <= nf * (1.0 + 1e-12) {
            GapRegime::Superlinear
        } else {
            GapRegime::Superlearning
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationGap {
    pub regime: GapRegime,
    pub r: f64,
}

/// Lower bound `R` on `E_p[S] - E_U[S]` for `p` at TV distance `xi` from
/// uniform:
///
/// ```text
/// R = C * xi^2 m^2 / n^2     if m <= n
///     C * xi^2 sqrt(m / n)   if n < m <= n / xi^2
///     C * xi                 otherwise
/// ```
pub fn expectation_gap(n: usize, m: u64, xi: f64, c: f64) -> Result<ExpectationGap> {
    if n < 2 || m < 6 {
        return Err(Error::InvalidParam(format!(
            "expectation gap needs n >= 2 and m >= 6, got n = {n}, m = {m}"
        )));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidParam(format!("xi = {xi} outside (0, 1)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!("gap constant {c} must be positive")));
    }
    let regime = GapRegime::classify(n, m, xi);
    let (nf, mf) = (n as f64, m as f64);
    let r = match regime {
        GapRegime::Sublinear => c * xi * xi * (mf / nf) * (mf / nf),
        GapRegime::Superlinear => c * xi * xi * (mf / nf).sqrt(),
        GapRegime::Superlearning => c * xi,
    };
    Ok(ExpectationGap { regime, r })
}
