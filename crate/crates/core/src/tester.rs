//! The replicable uniformity tester, the random-threshold baselines, and the
//! identity tester built on the reduction.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Constants;
use crate::dist::{Pmf, SampleBatch, Sampler};
use crate::error::{Error, Result};
use crate::reduction::IdentityReduction;
use crate::rng::{unit_f64, SeedSplit, Stream};
use crate::stats::{
    chi2_statistic, collision_statistic, exact_uniform_mean, expectation_gap, tv_statistic,
    GapRegime,
};

/// Smallest per-run sample count allowed (the gap bound needs `m >= 6`).
pub const MIN_SAMPLES: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    pub n: usize,
    pub eps: f64,
    pub rho: f64,
    pub constants: Constants,
}

impl TesterParams {
    pub fn new(n: usize, eps: f64, rho: f64, constants: Constants) -> Result<Self> {
        let p = Self {
            n,
            eps,
            rho,
            constants,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParam(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::InvalidParam(format!("eps = {} outside (0, 1/2)", self.eps)));
        }
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(Error::InvalidParam(format!("rho = {} outside (0, 1/2)", self.rho)));
        }
        self.constants.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    /// Samples per batch.
    pub m: u64,
    /// Number of batches; always odd.
    pub m0: u64,
}

/// Per-batch sample count and number of batches for the median.
pub fn derive_sizes(params: &TesterParams) -> Sizes {
    let TesterParams { n, eps, rho, constants: c } = *params;
    let nf = n as f64;
    let e2 = eps * eps;
    let raw = c.c_m1 * nf.sqrt() / (rho * e2) * (nf / rho).ln().sqrt() + c.c_m2 / (rho * rho * e2);
    let m = (raw.ceil() as u64).max(MIN_SAMPLES);
    let target = (c.c_m0 * (4.0 / rho).ln()).ceil().max(1.0) as u64;
    let m0 = if target % 2 == 1 { target } else { target + 1 };
    Sizes { m, m0 }
}

/// Anything that can hand out batches of samples over a fixed domain.
pub trait SampleOracle: Send + Sync {
    fn domain_size(&self) -> usize;
    fn draw_batch(&self, m: u64, rng: &mut Stream) -> Result<SampleBatch>;
}

impl SampleOracle for Sampler {
    fn domain_size(&self) -> usize {
        self.n()
    }

    fn draw_batch(&self, m: u64, rng: &mut Stream) -> Result<SampleBatch> {
        Ok(Sampler::draw_batch(self, m, rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    }
}

/// Outcome of one tester run with every intermediate quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub s_median: f64,
    pub threshold: f64,
    pub r0: f64,
    pub regime: GapRegime,
    pub n: usize,
    pub m: u64,
    pub m0: u64,
    pub mu_uniform: f64,
    pub gap: f64,
    /// The `m0` per-batch statistics, in draw order.
    pub statistics: Vec<f64>,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

/// The algorithm's coin: `r0 ~ Unif(1/4, 3/4)`, always the first draw of the
/// internal stream.
pub fn draw_r0(internal: &mut Stream) -> f64 {
    0.25 + 0.5 * unit_f64(internal)
}

/// Threshold `mu(U_n) + r0 * R`. Depends only on the parameters and `r0`.
pub fn threshold_for(params: &TesterParams, sizes: Sizes, r0: f64) -> Result<(f64, f64, f64, GapRegime)> {
    let mu = exact_uniform_mean(params.n, sizes.m)?;
    let gap = expectation_gap(params.n, sizes.m, params.eps, params.constants.c_gap)?;
    Ok((mu + r0 * gap.r, mu, gap.r, gap.regime))
}

/// Draws `m0` batches and returns the per-batch TV statistics.
pub fn batch_statistics(
    oracle: &dyn SampleOracle,
    sizes: Sizes,
    sample: &mut Stream,
) -> Result<Vec<f64>> {
    (0..sizes.m0)
        .map(|_| {
            let batch = oracle.draw_batch(sizes.m, sample)?;
            Ok(tv_statistic(&batch)?.value)
        })
        .collect()
}

/// Median of an odd-length slice.
pub fn odd_median(xs: &[f64]) -> f64 {
    assert!(xs.len() % 2 == 1, "median needs an odd count");
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}

/// One run of the replicable uniformity tester.
pub fn run_tester(
    oracle: &dyn SampleOracle,
    params: &TesterParams,
    seeds: SeedSplit,
) -> Result<Verdict> {
    params.validate()?;
    if oracle.domain_size() != params.n {
        return Err(Error::DomainMismatch {
            left: oracle.domain_size(),
            right: params.n,
        });
    }
    let SeedSplit {
        mut internal,
        mut sample,
    } = seeds;
    let r0 = draw_r0(&mut internal);
    let sizes = derive_sizes(params);
    let statistics = batch_statistics(oracle, sizes, &mut sample)?;
    let s_median = odd_median(&statistics);
    let (threshold, mu_uniform, gap, regime) = threshold_for(params, sizes, r0)?;
    let decision = if s_median < threshold {
        Decision::Accept
    } else {
        Decision::Reject
    };
    Ok(Verdict {
        decision,
        s_median,
        threshold,
        r0,
        regime,
        n: params.n,
        m: sizes.m,
        m0: sizes.m0,
        mu_uniform,
        gap,
        statistics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Collision,
    Chi2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineVerdict {
    pub kind: BaselineKind,
    pub decision: Decision,
    pub statistic: f64,
    pub threshold: f64,
    /// Position of the threshold inside its interval, uniform on `[0, 1)`.
    pub u: f64,
}

/// A single-batch tester that rejects when its statistic reaches a threshold
/// drawn uniformly between the uniform-case and far-case expectations.
pub fn run_baseline_tester(
    kind: BaselineKind,
    sampler: &Sampler,
    m: u64,
    eps: f64,
    seeds: SeedSplit,
) -> Result<BaselineVerdict> {
    if m < 2 {
        return Err(Error::InvalidParam(format!("baseline needs m >= 2, got {m}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!("eps = {eps} outside (0, 1)")));
    }
    let SeedSplit {
        mut internal,
        mut sample,
    } = seeds;
    let u = unit_f64(&mut internal);
    let n = sampler.n() as f64;
    let mf = m as f64;
    let (statistic, lo, hi) = match kind {
        BaselineKind::Collision => {
            let batch = Sampler::draw_batch(sampler, m, &mut sample);
            let pairs = mf * (mf - 1.0) / 2.0;
            (
                collision_statistic(&batch) as f64,
                pairs / n,
                pairs * (1.0 + eps * eps) / n,
            )
        }
        BaselineKind::Chi2 => {
            let batch = sampler.draw_poissonized_batch(mf, &mut sample);
            (
                chi2_statistic(&batch, mf)?,
                mf * eps * eps / 500.0,
                mf * eps * eps / 5.0,
            )
        }
    };
    let threshold = lo + u * (hi - lo);
    let decision = if statistic >= threshold {
        Decision::Reject
    } else {
        Decision::Accept
    };
    Ok(BaselineVerdict {
        kind,
        decision,
        statistic,
        threshold,
        u,
    })
}

/// Samples of `p` pushed through an [`IdentityReduction`]; the reduction's
/// coins come from the sample stream.
#[derive(Debug, Clone)]
pub struct ReducedOracle {
    source: Arc<Sampler>,
    reduction: Arc<IdentityReduction>,
}

impl ReducedOracle {
    pub fn new(source: Arc<Sampler>, reduction: Arc<IdentityReduction>) -> Result<Self> {
        if source.n() != reduction.n() {
            return Err(Error::DomainMismatch {
                left: source.n(),
                right: reduction.n(),
            });
        }
        Ok(Self { source, reduction })
    }
}

impl SampleOracle for ReducedOracle {
    fn domain_size(&self) -> usize {
        self.reduction.output_n()
    }

    fn draw_batch(&self, m: u64, rng: &mut Stream) -> Result<SampleBatch> {
        let mut counts = vec![0u64; self.reduction.output_n()];
        for _ in 0..m {
            let raw = self.source.draw_one(rng);
            counts[self.reduction.reduce(raw, rng)] += 1;
        }
        SampleBatch::from_counts(counts)
    }
}

/// Identity tester against an explicit reference `q`: reduce to `[6n]` and
/// test uniformity there at tolerance `eps/3`.
#[derive(Debug, Clone)]
pub struct IdentityTester {
    reduction: Arc<IdentityReduction>,
    inner: TesterParams,
}

impl IdentityTester {
    /// `params` describe the identity problem on `[n]` at tolerance `eps`.
    pub fn new(q: &Pmf, params: &TesterParams) -> Result<Self> {
        params.validate()?;
        if q.n() != params.n {
            return Err(Error::DomainMismatch {
                left: q.n(),
                right: params.n,
            });
        }
        let inner = TesterParams::new(6 * params.n, params.eps / 3.0, params.rho, params.constants)?;
        Ok(Self {
            reduction: Arc::new(IdentityReduction::new(q)),
            inner,
        })
    }

    pub fn inner_params(&self) -> &TesterParams {
        &self.inner
    }

    pub fn reduction(&self) -> &IdentityReduction {
        &self.reduction
    }

    pub fn run(&self, p: Arc<Sampler>, seeds: SeedSplit) -> Result<Verdict> {
        let oracle = ReducedOracle::new(p, Arc::clone(&self.reduction))?;
        run_tester(&oracle, &self.inner, seeds)
    }
}

pub fn run_identity_tester(
    p: Arc<Sampler>,
    q: &Pmf,
    params: &TesterParams,
    seeds: SeedSplit,
) -> Result<Verdict> {
    IdentityTester::new(q, params)?.run(p, seeds)
}

/// Fixes `r0` from a stream without running the tester; used to check that
/// the threshold depends on the internal coins alone.
pub fn peek_threshold(params: &TesterParams, internal: &Stream) -> Result<f64> {
    let mut coins = internal.clone();
    let r0 = draw_r0(&mut coins);
    Ok(threshold_for(params, derive_sizes(params), r0)?.0)
}

/// Convenience: a uniformly random relabeling of `[n]`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}
