//! Monte Carlo experiment engine.
//!
//! Every trial draws its randomness from streams keyed by
//! `(master_seed, trial, run)`, and trials are collected in index order, so a
//! report depends only on its configuration and never on the worker count.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Constants;
use crate::dist::{make_instance, InstanceSpec, Sampler};
use crate::error::{Error, Result};
use crate::numeric::{mean_sd, ols_slope, quantile};
use crate::rng::{derive_stream, unit_f64, Role, SeedSplit};
use crate::stats::{
    chi2_statistic, collision_statistic, exact_uniform_mean, expectation_gap, tv_statistic,
};
use crate::tester::{
    batch_statistics, derive_sizes, odd_median, run_tester, Decision, TesterParams,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    // Rounding can push an endpoint past p when p is 0 or 1.
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// One CSV row: a single tester run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub instance_kind: String,
    pub xi: f64,
    pub n: usize,
    pub m: u64,
    pub m0: u64,
    pub statistic: f64,
    pub threshold: f64,
    pub r0: f64,
    pub decision: Decision,
    /// Only set in paired experiments.
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub config_echo: BTreeMap<String, String>,
    pub per_trial: Vec<TrialRow>,
}

impl ExperimentReport {
    fn new(
        experiment_id: &str,
        successes: u64,
        trials: u64,
        config_echo: BTreeMap<String, String>,
        per_trial: Vec<TrialRow>,
    ) -> Self {
        let (wilson_lo, wilson_hi) = wilson_interval(successes, trials);
        Self {
            experiment_id: experiment_id.to_string(),
            trials,
            successes,
            rate: successes as f64 / trials as f64,
            wilson_lo,
            wilson_hi,
            config_echo,
            per_trial,
        }
    }

    /// Summary JSON: everything except the per-trial rows.
    pub fn summary_json(&self) -> String {
        let summary = serde_json::json!({
            "experiment_id": self.experiment_id,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "wilson_lo": self.wilson_lo,
            "wilson_hi": self.wilson_hi,
            "config_echo": self.config_echo,
        });
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trial_csv(&self.experiment_id, &self.config_echo, &self.per_trial, out)
    }
}

pub const TRIAL_COLUMNS: [&str; 12] = [
    "experiment_id",
    "trial",
    "instance_kind",
    "xi",
    "n",
    "m",
    "m0",
    "statistic",
    "threshold",
    "r0",
    "decision",
    "agree",
];

fn write_header<W: Write>(echo: &BTreeMap<String, String>, out: &mut W) -> Result<()> {
    for (k, v) in echo {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

pub fn write_trial_csv<W: Write>(
    experiment_id: &str,
    echo: &BTreeMap<String, String>,
    rows: &[TrialRow],
    mut out: W,
) -> Result<()> {
    write_header(echo, &mut out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_COLUMNS)?;
    for r in rows {
        w.write_record([
            experiment_id.to_string(),
            r.trial.to_string(),
            r.instance_kind.clone(),
            format!("{:?}", r.xi),
            r.n.to_string(),
            r.m.to_string(),
            r.m0.to_string(),
            format!("{:?}", r.statistic),
            format!("{:?}", r.threshold),
            format!("{:?}", r.r0),
            r.decision.as_str().to_string(),
            r.agree.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `f(0..count)` on `workers` threads and returns results in index order.
pub fn run_indexed<T, F>(workers: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

fn params_echo(params: &TesterParams, master_seed: u64) -> BTreeMap<String, String> {
    let sizes = derive_sizes(params);
    let mut echo = BTreeMap::new();
    echo.insert("n".into(), params.n.to_string());
    echo.insert("eps".into(), format!("{:?}", params.eps));
    echo.insert("rho".into(), format!("{:?}", params.rho));
    echo.insert("m".into(), sizes.m.to_string());
    echo.insert("m0".into(), sizes.m0.to_string());
    echo.insert("c_gap".into(), format!("{:?}", params.constants.c_gap));
    echo.insert("c_m1".into(), format!("{:?}", params.constants.c_m1));
    echo.insert("c_m2".into(), format!("{:?}", params.constants.c_m2));
    echo.insert("c_m0".into(), format!("{:?}", params.constants.c_m0));
    echo.insert("master_seed".into(), master_seed.to_string());
    echo
}

fn row_from(trial: u64, spec: &InstanceSpec, v: &crate::tester::Verdict, agree: Option<bool>) -> TrialRow {
    TrialRow {
        trial,
        instance_kind: spec.kind.label().to_string(),
        xi: spec.kind.xi(),
        n: v.n,
        m: v.m,
        m0: v.m0,
        statistic: v.s_median,
        threshold: v.threshold,
        r0: v.r0,
        decision: v.decision,
        agree,
    }
}

fn check_count(name: &str, count: u64) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParam(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Runs the tester `trials` times on one instance; a trial succeeds when the
/// decision equals `expected`.
pub fn correctness_experiment(
    instance: &InstanceSpec,
    params: &TesterParams,
    trials: u64,
    master_seed: u64,
    expected: Decision,
    workers: usize,
) -> Result<ExperimentReport> {
    check_count("trials", trials)?;
    params.validate()?;
    let sampler = Sampler::new(make_instance(instance)?);
    let rows = run_indexed(workers, trials, |t| {
        let v = run_tester(&sampler, params, SeedSplit::for_trial(master_seed, t, 0))?;
        Ok(row_from(t, instance, &v, None))
    })?;
    let successes = rows.iter().filter(|r| r.decision == expected).count() as u64;
    let mut echo = params_echo(params, master_seed);
    echo.insert("experiment".into(), "correctness".into());
    echo.insert("instance".into(), serde_json::to_string(instance)?);
    echo.insert("expected".into(), expected.as_str().into());
    echo.insert("trials".into(), trials.to_string());
    Ok(ExperimentReport::new("correctness", successes, trials, echo, rows))
}

/// Where paired runs draw their instance from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum Prior {
    /// `PairedBias(xi)` with `xi ~ Unif[0, max_xi]`.
    PairedBias { max_xi: f64 },
    Fixed { instance: InstanceSpec },
}

impl Prior {
    /// The default hard prior: `xi ~ Unif[0, 2 eps]`, so TV spans `[0, eps]`.
    pub fn default_for(params: &TesterParams) -> Self {
        Prior::PairedBias {
            max_xi: (2.0 * params.eps).min(1.0),
        }
    }

    fn draw(&self, n: usize, master_seed: u64, pair: u64) -> InstanceSpec {
        match self {
            Prior::PairedBias { max_xi } => {
                let mut rng = derive_stream(master_seed, pair, 0, Role::Prior);
                InstanceSpec::paired_bias(n, max_xi * unit_f64(&mut rng))
            }
            Prior::Fixed { instance } => instance.clone(),
        }
    }
}

/// Two runs per pair sharing the internal stream, with independent sample
/// streams unless `shared_samples`. A pair succeeds when both decisions agree.
pub fn replicability_experiment(
    prior: &Prior,
    params: &TesterParams,
    pairs: u64,
    master_seed: u64,
    shared_samples: bool,
    workers: usize,
) -> Result<ExperimentReport> {
    check_count("pairs", pairs)?;
    params.validate()?;
    if let Prior::PairedBias { max_xi } = prior {
        if !(0.0..=1.0).contains(max_xi) {
            return Err(Error::InvalidParam(format!("prior max_xi = {max_xi} outside [0, 1]")));
        }
    }
    let per_pair = run_indexed(workers, pairs, |t| {
        let spec = prior.draw(params.n, master_seed, t);
        let sampler = Sampler::new(make_instance(&spec)?);
        let first = SeedSplit::for_trial(master_seed, t, 0);
        let second = if shared_samples {
            first.clone()
        } else {
            SeedSplit::for_trial(master_seed, t, 1)
        };
        let a = run_tester(&sampler, params, first)?;
        let b = run_tester(&sampler, params, second)?;
        let agree = a.decision == b.decision;
        Ok([
            row_from(t, &spec, &a, Some(agree)),
            row_from(t, &spec, &b, Some(agree)),
        ])
    })?;
    let successes = per_pair.iter().filter(|p| p[0].agree == Some(true)).count() as u64;
    let rows: Vec<TrialRow> = per_pair.into_iter().flatten().collect();
    let mut echo = params_echo(params, master_seed);
    echo.insert("experiment".into(), "replicability".into());
    echo.insert("prior".into(), serde_json::to_string(prior)?);
    echo.insert("pairs".into(), pairs.to_string());
    echo.insert("shared_samples".into(), shared_samples.to_string());
    Ok(ExperimentReport::new("replicability", successes, pairs, echo, rows))
}

/// Estimated acceptance probability of the tester on `PairedBias(xi)` along a
/// grid of `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub xi_grid: Vec<f64>,
    pub acc_estimates: Vec<f64>,
    pub wilson_lo: Vec<f64>,
    pub wilson_hi: Vec<f64>,
    pub trials_per_point: u64,
    pub fixed_internal: bool,
    pub config_echo: BTreeMap<String, String>,
}

impl SweepCurve {
    /// First `xi` where the curve crosses `level` from above, by linear
    /// interpolation between neighbouring grid points.
    pub fn crossing_point(&self, level: f64) -> Option<f64> {
        let (xs, ys) = (&self.xi_grid, &self.acc_estimates);
        (0..xs.len().saturating_sub(1)).find_map(|j| {
            let (y0, y1) = (ys[j], ys[j + 1]);
            if y0 >= level && y1 < level {
                Some(xs[j] + (xs[j + 1] - xs[j]) * (y0 - level) / (y0 - y1))
            } else {
                None
            }
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_header(&self.config_echo, &mut out)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment_id", "point", "xi", "trials", "acc", "wilson_lo", "wilson_hi"])?;
        for j in 0..self.xi_grid.len() {
            w.write_record([
                "sweep".to_string(),
                j.to_string(),
                format!("{:?}", self.xi_grid[j]),
                self.trials_per_point.to_string(),
                format!("{:?}", self.acc_estimates[j]),
                format!("{:?}", self.wilson_lo[j]),
                format!("{:?}", self.wilson_hi[j]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// With `fixed_internal`, one internal stream (trial 0) is frozen across the
/// whole sweep; otherwise every trial has fresh coins.
pub fn acceptance_sweep(
    params: &TesterParams,
    xi_grid: &[f64],
    trials_per_point: u64,
    master_seed: u64,
    fixed_internal: bool,
    workers: usize,
) -> Result<SweepCurve> {
    check_count("trials_per_point", trials_per_point)?;
    params.validate()?;
    if xi_grid.is_empty() {
        return Err(Error::InvalidParam("empty xi grid".into()));
    }
    if xi_grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParam("xi grid must lie in [0, 1]".into()));
    }
    if xi_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParam("xi grid must be strictly increasing".into()));
    }
    let frozen = derive_stream(master_seed, 0, 0, Role::Internal);
    let points = xi_grid.len() as u64;
    let decisions = run_indexed(workers, points * trials_per_point, |k| {
        let j = (k / trials_per_point) as usize;
        let sampler = Sampler::new(make_instance(&InstanceSpec::paired_bias(params.n, xi_grid[j]))?);
        let mut seeds = SeedSplit::for_trial(master_seed, k, 0);
        if fixed_internal {
            seeds.internal = frozen.clone();
        }
        Ok(run_tester(&sampler, params, seeds)?.decision == Decision::Accept)
    })?;
    let mut acc_estimates = Vec::new();
    let mut wilson_lo = Vec::new();
    let mut wilson_hi = Vec::new();
    for chunk in decisions.chunks(trials_per_point as usize) {
        let accepts = chunk.iter().filter(|&&a| a).count() as u64;
        let (lo, hi) = wilson_interval(accepts, trials_per_point);
        acc_estimates.push(accepts as f64 / trials_per_point as f64);
        wilson_lo.push(lo);
        wilson_hi.push(hi);
    }
    let mut echo = params_echo(params, master_seed);
    echo.insert("experiment".into(), "sweep".into());
    echo.insert("trials_per_point".into(), trials_per_point.to_string());
    echo.insert("fixed_internal".into(), fixed_internal.to_string());
    Ok(SweepCurve {
        xi_grid: xi_grid.to_vec(),
        acc_estimates,
        wilson_lo,
        wilson_hi,
        trials_per_point,
        fixed_internal,
        config_echo: echo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierStat {
    Collision,
    Chi2,
    TvStat,
}

impl BarrierStat {
    pub fn as_str(&self) -> &'static str {
        match self {
            BarrierStat::Collision => "collision",
            BarrierStat::Chi2 => "chi2",
            BarrierStat::TvStat => "tv",
        }
    }

    /// Expectation gap the statistic has to resolve at bias `eps`.
    pub fn gap(&self, n: usize, m: u64, eps: f64) -> Result<f64> {
        let (nf, mf) = (n as f64, m as f64);
        Ok(match self {
            BarrierStat::Collision => mf * mf * eps * eps / nf,
            BarrierStat::Chi2 => mf * eps * eps,
            BarrierStat::TvStat => expectation_gap(n, m, eps, 1.0)?.r,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub m: u64,
    pub mean: f64,
    pub sd: f64,
    pub gap: f64,
    pub sd_over_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierTable {
    pub stat: BarrierStat,
    pub n: usize,
    pub eps: f64,
    pub heavy_mass: f64,
    pub runs_per_m: u64,
    pub rows: Vec<BarrierRow>,
    /// Least-squares slope of `ln sd` on `ln m`.
    pub slope: f64,
    pub config_echo: BTreeMap<String, String>,
}

impl BarrierTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_header(&self.config_echo, &mut out)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment_id", "stat", "m", "mean", "sd", "gap", "sd_over_gap"])?;
        for r in &self.rows {
            w.write_record([
                "barrier".to_string(),
                self.stat.as_str().to_string(),
                r.m.to_string(),
                format!("{:?}", r.mean),
                format!("{:?}", r.sd),
                format!("{:?}", r.gap),
                format!("{:?}", r.sd_over_gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run-to-run spread of a statistic on `HeavyElement(n^{-1/2})`.
pub fn barrier_experiment(
    stat: BarrierStat,
    n: usize,
    m_grid: &[u64],
    runs_per_m: u64,
    eps: f64,
    master_seed: u64,
    workers: usize,
) -> Result<BarrierTable> {
    if runs_per_m < 2 {
        return Err(Error::InvalidParam("runs_per_m must be at least 2".into()));
    }
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid[0] < 2 {
        return Err(Error::InvalidParam("m grid must be non-empty, increasing, >= 2".into()));
    }
    let heavy_mass = 1.0 / (n as f64).sqrt();
    let sampler = Sampler::new(make_instance(&InstanceSpec::heavy_element(n, heavy_mass))?);
    let values = run_indexed(workers, m_grid.len() as u64 * runs_per_m, |k| {
        let m = m_grid[(k / runs_per_m) as usize];
        let mut rng = derive_stream(master_seed, k, 0, Role::Sample);
        Ok(match stat {
            BarrierStat::Collision => collision_statistic(&sampler.draw_batch(m, &mut rng)) as f64,
            BarrierStat::Chi2 => {
                let batch = sampler.draw_poissonized_batch(m as f64, &mut rng);
                chi2_statistic(&batch, m as f64)?
            }
            BarrierStat::TvStat => tv_statistic(&sampler.draw_batch(m, &mut rng))?.value,
        })
    })?;
    let mut rows = Vec::with_capacity(m_grid.len());
    for (&m, chunk) in m_grid.iter().zip(values.chunks(runs_per_m as usize)) {
        let (mean, sd) = mean_sd(chunk);
        let gap = stat.gap(n, m, eps)?;
        rows.push(BarrierRow {
            m,
            mean,
            sd,
            gap,
            sd_over_gap: sd / gap,
        });
    }
    let log_m: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let log_sd: Vec<f64> = rows.iter().map(|r| r.sd.ln()).collect();
    let slope = if rows.len() >= 2 { ols_slope(&log_m, &log_sd) } else { f64::NAN };
    let mut echo = BTreeMap::new();
    echo.insert("experiment".into(), "barrier".into());
    echo.insert("stat".into(), stat.as_str().into());
    echo.insert("n".into(), n.to_string());
    echo.insert("eps".into(), format!("{eps:?}"));
    echo.insert("heavy_mass".into(), format!("{heavy_mass:?}"));
    echo.insert("runs_per_m".into(), runs_per_m.to_string());
    echo.insert("master_seed".into(), master_seed.to_string());
    Ok(BarrierTable {
        stat,
        n,
        eps,
        heavy_mass,
        runs_per_m,
        rows,
        slope,
        config_echo: echo,
    })
}

/// The pilot grid calibration runs on by default.
pub const DEFAULT_PILOT_GRID: [(usize, f64); 3] = [(500, 0.3), (1000, 0.25), (2000, 0.2)];

/// Per-pilot calibration evidence. `c_min`/`c_max` bound the admissible gap
/// constant on this pilot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotResult {
    pub n: usize,
    pub eps: f64,
    pub m: u64,
    pub m0: u64,
    pub mu_uniform: f64,
    /// Gap at `C = 1`.
    pub unit_gap: f64,
    /// Uniform-instance `S_median` at quantile `1 - rho/4`.
    pub q_uniform: f64,
    /// Far-instance `S_median` at quantile `rho/4`.
    pub q_far: f64,
    pub c_min: f64,
    pub c_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constants: Constants,
    pub pilots: Vec<PilotResult>,
    pub provenance: String,
}

/// Chooses `c_gap` so that on every pilot the far instance `PairedBias(2 eps)`
/// clears `mu + R` and the uniform instance stays under `mu + R/4`, each at
/// the `rho/4` tail of its empirical `S_median` distribution.
///
/// `R` is linear in `c_gap`, so each pilot gives a closed-form interval
/// `[c_min, c_max]`; the result is the geometric midpoint of their
/// intersection. The sample-size constants are taken from `base`.
pub fn calibrate(
    grid: &[(usize, f64)],
    rho: f64,
    trials: u64,
    master_seed: u64,
    base: Constants,
    workers: usize,
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(Error::InvalidParam("empty pilot grid".into()));
    }
    check_count("trials", trials)?;
    let mut pilots = Vec::with_capacity(grid.len());
    for (idx, &(n, eps)) in grid.iter().enumerate() {
        let params = TesterParams::new(n, eps, rho, base)?;
        if 2.0 * eps > 1.0 {
            return Err(Error::InvalidParam(format!("pilot eps = {eps} too large")));
        }
        let sizes = derive_sizes(&params);
        let mu_uniform = exact_uniform_mean(n, sizes.m)?;
        let unit_gap = expectation_gap(n, sizes.m, eps, 1.0)?.r;
        let mut medians = [Vec::new(), Vec::new()];
        for (which, spec) in [InstanceSpec::uniform(n), InstanceSpec::paired_bias(n, 2.0 * eps)]
            .iter()
            .enumerate()
        {
            let sampler = Sampler::new(make_instance(spec)?);
            let run = (2 * idx + which) as u64;
            medians[which] = run_indexed(workers, trials, |t| {
                let mut rng = derive_stream(master_seed, t, run, Role::Pilot);
                Ok(odd_median(&batch_statistics(&sampler, sizes, &mut rng)?))
            })?;
        }
        let q_uniform = quantile(&medians[0], 1.0 - rho / 4.0);
        let q_far = quantile(&medians[1], rho / 4.0);
        pilots.push(PilotResult {
            n,
            eps,
            m: sizes.m,
            m0: sizes.m0,
            mu_uniform,
            unit_gap,
            q_uniform,
            q_far,
            c_min: 4.0 * (q_uniform - mu_uniform) / unit_gap,
            c_max: (q_far - mu_uniform) / unit_gap,
        });
    }
    let lo = pilots.iter().map(|p| p.c_min).fold(f64::NEG_INFINITY, f64::max);
    let hi = pilots.iter().map(|p| p.c_max).fold(f64::INFINITY, f64::min);
    if !(hi > 0.0 && lo < hi) {
        let detail: Vec<String> = pilots
            .iter()
            .map(|p| format!("(n={}, eps={}): c_gap in [{:.4}, {:.4}]", p.n, p.eps, p.c_min, p.c_max))
            .collect();
        return Err(Error::Infeasible(format!(
            "no c_gap satisfies every pilot (need max c_min {lo:.4} < min c_max {hi:.4}); {}",
            detail.join("; ")
        )));
    }
    let c_gap = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
    let constants = Constants { c_gap, ..base };
    constants.validate()?;
    let grid_text: Vec<String> = grid.iter().map(|(n, e)| format!("({n}, {e})")).collect();
    let provenance = format!(
        "calibrate grid={} rho={rho} trials={trials} seed={master_seed:#x} feasible c_gap in [{lo:.6}, {hi:.6}]",
        grid_text.join(" ")
    );
    Ok(Calibration {
        constants,
        pilots,
        provenance,
    })
}
