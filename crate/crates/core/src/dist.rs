//! Explicit finite distributions, the instance families used by the testers,
//! and multinomial / Poissonized samplers.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Absolute tolerance on the total mass of a distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability mass function over `[n] = {0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct Pmf {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    n: usize,
    probs: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;

    fn try_from(r: PmfRepr) -> Result<Self> {
        if r.n != r.probs.len() {
            return Err(Error::InvalidPmf(format!(
                "n = {} but {} probabilities given",
                r.n,
                r.probs.len()
            )));
        }
        Pmf::new(r.probs)
    }
}

impl From<Pmf> for PmfRepr {
    fn from(p: Pmf) -> Self {
        PmfRepr {
            n: p.probs.len(),
            probs: p.probs,
        }
    }
}

impl Pmf {
    /// Validates `probs` and renormalizes it if its total differs from one
    /// by more than accumulated rounding noise. A vector that is already
    /// normalized is kept bit-for-bit.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty domain".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidPmf(format!("mass {p} at element {i}")));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPmf(format!("masses sum to {total}")));
        }
        if (total - 1.0).abs() > probs.len() as f64 * f64::EPSILON {
            for p in &mut probs {
                *p /= total;
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPmf("empty domain".into()));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pmf serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One probability per line, printed in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.probs.len() * 8);
        for p in &self.probs {
            writeln!(out, "{p:?}").expect("write to string");
        }
        out
    }

    /// Parses whitespace-separated probabilities.
    pub fn from_text(s: &str) -> Result<Self> {
        let probs = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Pmf::new(probs)
    }
}

/// Total variation distance `(1/2) sum |p_i - q_i|`.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DomainMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let l1 = compensated_sum(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()));
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// The instance families exercised by the testers and experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceKind {
    Uniform,
    /// Half the elements at `(1+xi)/n`, the other half at `(1-xi)/n`.
    PairedBias { xi: f64 },
    /// `PairedBias(xi)` with adjacent pair `k` exchanged when `swap_bits[k]`.
    LocalSwap { xi: f64, swap_bits: Vec<bool> },
    /// Element 0 carries `mass`; the rest is spread evenly over the others.
    HeavyElement { mass: f64 },
    Custom { probs: Vec<f64> },
}

impl InstanceKind {
    pub fn label(&self) -> &'static str {
        match self {
            InstanceKind::Uniform => "uniform",
            InstanceKind::PairedBias { .. } => "paired_bias",
            InstanceKind::LocalSwap { .. } => "local_swap",
            InstanceKind::HeavyElement { .. } => "heavy_element",
            InstanceKind::Custom { .. } => "custom",
        }
    }

    /// The bias parameter for paired families, 0 otherwise.
    pub fn xi(&self) -> f64 {
        match self {
            InstanceKind::PairedBias { xi } | InstanceKind::LocalSwap { xi, .. } => *xi,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    #[serde(flatten)]
    pub kind: InstanceKind,
}

impl InstanceSpec {
    pub fn new(n: usize, kind: InstanceKind) -> Self {
        Self { n, kind }
    }

    pub fn uniform(n: usize) -> Self {
        Self::new(n, InstanceKind::Uniform)
    }

    pub fn paired_bias(n: usize, xi: f64) -> Self {
        Self::new(n, InstanceKind::PairedBias { xi })
    }

    pub fn heavy_element(n: usize, mass: f64) -> Self {
        Self::new(n, InstanceKind::HeavyElement { mass })
    }

    pub fn point_mass(n: usize) -> Self {
        Self::heavy_element(n, 1.0)
    }
}

fn check_paired(n: usize, xi: f64) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInstance(format!(
            "paired families need an even domain size, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidInstance(format!("xi = {xi} outside [0, 1]")));
    }
    Ok(())
}

fn paired_masses(n: usize, xi: f64) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|i| if i % 2 == 0 { (1.0 + xi) / nf } else { (1.0 - xi) / nf })
        .collect()
}

/// Builds the explicit distribution for an instance.
pub fn make_instance(spec: &InstanceSpec) -> Result<Pmf> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidInstance("empty domain".into()));
    }
    match &spec.kind {
        InstanceKind::Uniform => Pmf::uniform(n),
        InstanceKind::PairedBias { xi } => {
            check_paired(n, *xi)?;
            Pmf::new(paired_masses(n, *xi))
        }
        InstanceKind::LocalSwap { xi, swap_bits } => {
            check_paired(n, *xi)?;
            if swap_bits.len() != n / 2 {
                return Err(Error::InvalidInstance(format!(
                    "expected {} swap bits, got {}",
                    n / 2,
                    swap_bits.len()
                )));
            }
            let mut probs = paired_masses(n, *xi);
            for (k, _) in swap_bits.iter().enumerate().filter(|(_, b)| **b) {
                probs.swap(2 * k, 2 * k + 1);
            }
            Pmf::new(probs)
        }
        InstanceKind::HeavyElement { mass } => {
            let nf = n as f64;
            if !(*mass >= 1.0 / nf && *mass <= 1.0) {
                return Err(Error::InvalidInstance(format!(
                    "heavy mass {mass} outside [1/n, 1]"
                )));
            }
            let mut probs = vec![0.0; n];
            probs[0] = *mass;
            if n > 1 {
                let rest = (1.0 - mass) / (nf - 1.0);
                probs[1..].iter_mut().for_each(|p| *p = rest);
            }
            Pmf::new(probs)
        }
        InstanceKind::Custom { probs } => {
            if probs.len() != n {
                return Err(Error::InvalidInstance(format!(
                    "custom masses have length {} but n = {n}",
                    probs.len()
                )));
            }
            Pmf::new(probs.clone())
        }
    }
}

/// Occurrence counts of `m` draws over `[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    m: u64,
    counts: Vec<u64>,
}

impl SampleBatch {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParam("empty domain".into()));
        }
        let m = counts
            .iter()
            .try_fold(0u64, |acc, c| acc.checked_add(*c))
            .ok_or_else(|| Error::InvalidParam("sample count overflows u64".into()))?;
        Ok(Self { m, counts })
    }

    /// Tallies an explicit sequence of samples over `[n]`.
    pub fn from_samples(n: usize, samples: &[usize]) -> Result<Self> {
        let mut counts = vec![0u64; n];
        for &s in samples {
            *counts
                .get_mut(s)
                .ok_or_else(|| Error::InvalidParam(format!("sample {s} outside [0, {n})")))? += 1;
        }
        Self::from_counts(counts)
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Cached per-distribution sampling state.
///
/// Immutable after construction apart from a lazily built alias table, so a
/// single sampler can be shared by every worker.
#[derive(Debug)]
pub struct Sampler {
    pmf: Pmf,
    /// `tail[i] = sum_{j >= i} p_j`, for conditional-binomial draws.
    tail: Vec<f64>,
    alias: OnceLock<Option<WeightedAliasIndex<f64>>>,
}

impl Clone for Sampler {
    fn clone(&self) -> Self {
        Self::new(self.pmf.clone())
    }
}

impl Sampler {
    pub fn new(pmf: Pmf) -> Self {
        let mut tail = vec![0.0; pmf.n() + 1];
        for i in (0..pmf.n()).rev() {
            tail[i] = tail[i + 1] + pmf.probs[i];
        }
        tail.pop();
        Self {
            pmf,
            tail,
            alias: OnceLock::new(),
        }
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn n(&self) -> usize {
        self.pmf.n()
    }

    fn alias(&self) -> Option<&WeightedAliasIndex<f64>> {
        self.alias
            .get_or_init(|| WeightedAliasIndex::new(self.pmf.probs.clone()).ok())
            .as_ref()
    }

    /// One draw from the distribution.
    pub fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.alias() {
            Some(alias) => alias.sample(rng),
            // Only reachable for n = 1 style degenerate tables.
            None => 0,
        }
    }

    /// A multinomial(m, p) count vector. Uses sequential conditional
    /// binomials when `m >= n` and per-sample alias draws otherwise.
    pub fn draw_batch<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> SampleBatch {
        let n = self.n();
        let mut counts = vec![0u64; n];
        if m == 0 {
        } else if m >= n as u64 {
            let mut remaining = m;
            for i in 0..n {
                if remaining == 0 {
                    break;
                }
                let p = self.pmf.probs[i];
                if p == 0.0 {
                    continue;
                }
                let cond = (p / self.tail[i]).min(1.0);
                let k = if cond >= 1.0 || i + 1 == n {
                    remaining
                } else {
                    Binomial::new(remaining, cond)
                        .expect("conditional probability in [0, 1]")
                        .sample(rng)
                };
                counts[i] = k;
                remaining -= k;
            }
            if remaining > 0 {
                // Rounding left mass past the last nonzero element.
                let last = self.pmf.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                counts[last] += remaining;
            }
        } else {
            for _ in 0..m {
                counts[self.draw_one(rng)] += 1;
            }
        }
        SampleBatch { m, counts }
    }

    /// Independent `Poisson(rate * p_i)` counts.
    pub fn draw_poissonized_batch<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> SampleBatch {
        let counts: Vec<u64> = self
            .pmf
            .probs
            .iter()
            .map(|p| {
                let lambda = rate * p;
                if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
                } else {
                    0
                }
            })
            .collect();
        let m = counts.iter().sum();
        SampleBatch { m, counts }
    }
}

/// One multinomial batch of `m` draws from `p`.
pub fn draw_batch<R: Rng + ?Sized>(p: &Pmf, m: u64, rng: &mut R) -> SampleBatch {
    Sampler::new(p.clone()).draw_batch(m, rng)
}

/// A Poissonized batch: count `i` is `Poisson(rate * p_i)`, independently.
pub fn draw_poissonized_batch<R: Rng + ?Sized>(
    p: &Pmf,
    rate: f64,
    rng: &mut R,
) -> Result<SampleBatch> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParam(format!("Poisson rate {rate} must be positive")));
    }
    Ok(Sampler::new(p.clone()).draw_poissonized_batch(rate, rng))
}
