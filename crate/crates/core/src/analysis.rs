//! Exact oracles: expectations by enumeration, reduction pushforwards, and
//! truncated-Poisson mutual information for a pair of paired-bias counts.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_factorial, multinomial};

use crate::dist::{tv_distance, Pmf, SampleBatch};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::reduction::IdentityReduction;

/// Largest number of outcomes any enumeration here will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Hard cap on the per-coordinate truncation point of [`pair_joint`].
pub const TRUNCATION_CAP: usize = 10_000;

/// Default per-conditional tail tolerance for [`pair_joint`].
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// `E[statistic]` over `m` i.i.d. draws from `p`, by enumerating all `n^m`
/// ordered sample sequences.
pub fn brute_force_mean_statistic<F>(p: &Pmf, m: u32, statistic: F) -> Result<f64>
where
    F: Fn(&SampleBatch) -> f64,
{
    let n = p.n();
    let sequences = (n as u128).checked_pow(m).unwrap_or(u128::MAX);
    if sequences > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            sequences,
            limit: ENUMERATION_LIMIT,
        });
    }
    let m = m as usize;
    let mut seq = vec![0usize; m];
    let mut acc = CompensatedSum::new();
    loop {
        let weight: f64 = seq.iter().map(|&i| p.probs()[i]).product();
        if weight > 0.0 {
            let batch = SampleBatch::from_samples(n, &seq)?;
            acc.add(weight * statistic(&batch));
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(acc.value());
            }
            seq[pos] += 1;
            if seq[pos] < n {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `E[statistic]` by enumerating count vectors (compositions of `m` into `n`
/// parts) weighted by their multinomial probability. Every statistic of a
/// [`SampleBatch`] is symmetric in sample order, so this equals
/// [`brute_force_mean_statistic`] at `C(m+n-1, n-1)` rather than `n^m` cost.
pub fn composition_mean_statistic<F>(p: &Pmf, m: u64, statistic: F) -> Result<f64>
where
    F: Fn(&SampleBatch) -> f64,
{
    let n = p.n();
    let outcomes = binomial_u128(m as u128 + n as u128 - 1, n as u128 - 1);
    if outcomes > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            sequences: outcomes,
            limit: ENUMERATION_LIMIT,
        });
    }
    let ln_p: Vec<f64> = p.probs().iter().map(|x| x.ln()).collect();
    let mut counts = vec![0u64; n];
    counts[n - 1] = m;
    let mut acc = CompensatedSum::new();
    loop {
        let zero_mass = counts.iter().zip(p.probs()).any(|(&c, &q)| c > 0 && q == 0.0);
        if !zero_mass {
            let ln_w: f64 = counts
                .iter()
                .zip(&ln_p)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, &l)| c as f64 * l)
                .sum::<f64>()
                + multinomial(m, &counts).ln();
            let batch = SampleBatch::from_counts(counts.clone())?;
            acc.add(ln_w.exp() * statistic(&batch));
        }
        // Next composition in reverse-lexicographic order over the first
        // n-1 coordinates; the last one absorbs the remainder.
        let mut i = n.wrapping_sub(2);
        loop {
            if i == usize::MAX {
                return Ok(acc.value());
            }
            if counts[n - 1] > 0 {
                counts[i] += 1;
                counts[n - 1] -= 1;
                break;
            }
            counts[n - 1] += counts[i];
            counts[i] = 0;
            i = i.wrapping_sub(1);
        }
    }
}

/// Exact output distribution of one `p`-sample pushed through the identity
/// reduction built from `q`.
pub fn exact_pushforward(q: &Pmf, p: &Pmf) -> Result<Pmf> {
    if q.n() != p.n() {
        return Err(Error::DomainMismatch {
            left: q.n(),
            right: p.n(),
        });
    }
    let reduction = IdentityReduction::new(q);
    let n = q.n();
    let nf = n as f64;
    let mut out = vec![0.0f64; reduction.output_n()];
    let overflow = reduction.overflow();
    let mut to_overflow = CompensatedSum::new();
    for i in 0..n {
        let mixed = 0.5 * p.probs()[i] + 0.5 / nf;
        let cells = reduction.cells(i);
        let stay = if overflow.is_empty() {
            1.0
        } else {
            reduction.stay_probability(i)
        };
        let per_cell = mixed * stay / cells.len() as f64;
        out[cells].iter_mut().for_each(|c| *c = per_cell);
        to_overflow.add(mixed * (1.0 - stay));
    }
    if !overflow.is_empty() {
        let per_cell = to_overflow.value() / overflow.len() as f64;
        out[overflow].iter_mut().for_each(|c| *c = per_cell);
    }
    Pmf::new(out)
}

/// Every distribution on `[n]` whose masses are multiples of `1/d` for some
/// `d <= max_den`, without duplicates.
pub fn rational_pmfs(n: usize, max_den: u32) -> Vec<Pmf> {
    let mut seen: Vec<Vec<(u64, u64)>> = Vec::new();
    let mut out = Vec::new();
    for d in 1..=max_den as u64 {
        let mut counts = vec![0u64; n];
        counts[n - 1] = d;
        loop {
            // Canonical reduced fractions for deduplication.
            let key: Vec<(u64, u64)> = counts
                .iter()
                .map(|&c| {
                    let g = gcd(c, d);
                    (c / g, d / g)
                })
                .collect();
            if !seen.contains(&key) {
                out.push(Pmf::new(counts.iter().map(|&c| c as f64 / d as f64).collect()).expect("valid rational pmf"));
                seen.push(key);
            }
            let mut i = n.wrapping_sub(2);
            loop {
                if i == usize::MAX {
                    break;
                }
                if counts[n - 1] > 0 {
                    counts[i] += 1;
                    counts[n - 1] -= 1;
                    break;
                }
                counts[n - 1] += counts[i];
                counts[i] = 0;
                i = i.wrapping_sub(1);
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Summary of an exhaustive scan of the reduction on small rational inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionScan {
    pub max_n: usize,
    pub max_den: u32,
    pub references: usize,
    pub pairs: usize,
    /// Largest entrywise deviation of `pushforward(q, q)` from uniform.
    pub max_uniform_error: f64,
    /// Smallest `tv(pushforward(q, p), U) - tv(p, q)/3` over `p != q`.
    pub min_far_slack: f64,
    pub failures: Vec<String>,
}

impl ReductionScan {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks both reduction guarantees on every rational pair on `[n]`,
/// `1 <= n <= max_n`, with denominators up to `max_den`.
pub fn reduction_scan(max_n: usize, max_den: u32, tol: f64) -> Result<ReductionScan> {
    let mut scan = ReductionScan {
        max_n,
        max_den,
        references: 0,
        pairs: 0,
        max_uniform_error: 0.0,
        min_far_slack: f64::INFINITY,
        failures: Vec::new(),
    };
    for n in 1..=max_n {
        let family = rational_pmfs(n, max_den);
        let uniform = Pmf::uniform(6 * n)?;
        for q in &family {
            scan.references += 1;
            let own = exact_pushforward(q, q)?;
            let err = own
                .probs()
                .iter()
                .map(|x| (x - 1.0 / (6 * n) as f64).abs())
                .fold(0.0, f64::max);
            scan.max_uniform_error = scan.max_uniform_error.max(err);
            if err > tol {
                scan.failures.push(format!("q = {:?}: pushforward off uniform by {err:e}", q.probs()));
            }
            for p in &family {
                if p == q {
                    continue;
                }
                scan.pairs += 1;
                let pushed = exact_pushforward(q, p)?;
                let slack = tv_distance(&pushed, &uniform)? - tv_distance(p, q)? / 3.0;
                scan.min_far_slack = scan.min_far_slack.min(slack);
                if slack < -tol {
                    scan.failures.push(format!(
                        "q = {:?}, p = {:?}: distance slack {slack:e}",
                        q.probs(),
                        p.probs()
                    ));
                }
            }
        }
    }
    Ok(scan)
}

fn ln_poisson(k: usize, lambda: f64) -> f64 {
    k as f64 * lambda.ln() - lambda - ln_factorial(k as u64)
}

/// `P(Poisson(lambda) > k)`, summed directly from the pmf.
fn poisson_upper_tail(k: usize, lambda: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut j = k + 1;
    loop {
        let term = ln_poisson(j, lambda).exp();
        acc.add(term);
        if (j as f64 > lambda && term <= acc.value() * 1e-20) || term == 0.0 && j as f64 > lambda {
            return acc.value();
        }
        j += 1;
    }
}

/// Joint law of two adjacent paired-bias counts under Poissonization, given
/// the hidden bit `X`:
///
/// `(M1, M2) | X=x ~ 1/2 [Poi(l(1+e_x)) x Poi(l(1-e_x)) + Poi(l(1-e_x)) x Poi(l(1+e_x))]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJointDist {
    pub lambda: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Counts range over `0..=k`.
    pub k: usize,
    /// `joint[x][a * (k + 1) + b] = P(M1 = a, M2 = b | X = x)`.
    pub joint: [Vec<f64>; 2],
    /// Probability outside the `(k+1) x (k+1)` box for each `x`.
    pub tail: [f64; 2],
    /// `max(tail)`.
    pub tail_mass: f64,
}

impl PairJointDist {
    pub fn get(&self, x: usize, a: usize, b: usize) -> f64 {
        self.joint[x][a * (self.k + 1) + b]
    }
}

fn product_tail(k: usize, a: f64, b: f64) -> f64 {
    let (ta, tb) = (poisson_upper_tail(k, a), poisson_upper_tail(k, b));
    ta + tb - ta * tb
}

pub fn pair_joint(lambda: f64, eps0: f64, eps1: f64, tail_tol: f64) -> Result<PairJointDist> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParam(format!("lambda = {lambda} must be positive")));
    }
    if !(0.0 <= eps0 && eps0 <= eps1 && eps1 < 1.0) {
        return Err(Error::InvalidParam(format!(
            "need 0 <= eps0 <= eps1 < 1, got {eps0}, {eps1}"
        )));
    }
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(Error::InvalidParam(format!("tail tolerance {tail_tol} must be positive")));
    }
    let rates = [eps0, eps1].map(|e| (lambda * (1.0 + e), lambda * (1.0 - e)));
    let tail_at = |k: usize| rates.map(|(hi, lo)| product_tail(k, hi, lo));

    let mut k = (lambda * (1.0 + eps1)).ceil() as usize;
    let mut tail = tail_at(k);
    while tail[0].max(tail[1]) > tail_tol {
        k += 1 + k / 8;
        if k > TRUNCATION_CAP {
            return Err(Error::TruncationCap {
                needed: k,
                cap: TRUNCATION_CAP,
            });
        }
        tail = tail_at(k);
    }

    let side = k + 1;
    let joint = rates.map(|(hi, lo)| {
        let ph: Vec<f64> = (0..side).map(|j| ln_poisson(j, hi).exp()).collect();
        let pl: Vec<f64> = (0..side).map(|j| ln_poisson(j, lo).exp()).collect();
        let mut m = vec![0.0; side * side];
        for a in 0..side {
            for b in 0..side {
                m[a * side + b] = 0.5 * (ph[a] * pl[b] + pl[a] * ph[b]);
            }
        }
        m
    });
    Ok(PairJointDist {
        lambda,
        eps0,
        eps1,
        k,
        joint,
        tail,
        tail_mass: tail[0].max(tail[1]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInfoValue {
    /// `I(X : M1, M2)` in nats.
    pub value: f64,
    /// Bound on the mass-weighted contribution lost to truncation.
    pub error_budget: f64,
    /// `constant * eps^2 delta^2 lambda^2` for the supplied constant.
    pub bound_rhs: f64,
}

/// `(1 + d) ln(1 + d) + (1 - d) ln(1 - d)`, accurate near zero.
fn symmetric_entropy_term(d: f64) -> f64 {
    let d2 = d * d;
    if d2 < 1e-4 {
        // sum_k d^(2k) / (k (2k - 1))
        let mut term = d2;
        let mut acc = 0.0;
        for k in 1..=8 {
            acc += term / (k * (2 * k - 1)) as f64;
            term *= d2;
        }
        acc
    } else {
        (1.0 + d) * d.ln_1p() + (1.0 - d) * (-d).ln_1p()
    }
}

/// Mutual information between the unbiased bit `X` and the pair `(M1, M2)`.
///
/// Each cell contributes `Pbar * [(1+d) ln(1+d) + (1-d) ln(1-d)] / 2` with
/// `Pbar = (P0 + P1)/2` and `d = (P0 - P1)/(P0 + P1)`, which is the usual
/// `sum_x 1/2 P_x ln(P_x / Pbar)` rearranged so that every term is
/// nonnegative.
pub fn mutual_info_pair(d: &PairJointDist, bound_constant: f64) -> MutualInfoValue {
    let mut acc = CompensatedSum::new();
    for (p0, p1) in d.joint[0].iter().zip(&d.joint[1]) {
        let s = p0 + p1;
        if s > 0.0 {
            let ratio = (p0 - p1) / s;
            acc.add(0.25 * s * symmetric_entropy_term(ratio));
        }
    }
    let t = d.tail_mass;
    let error_budget = if t > 0.0 { 2.0 * t * t.ln().abs() } else { 0.0 };
    let delta = d.eps1 - d.eps0;
    MutualInfoValue {
        value: acc.value().max(0.0),
        error_budget,
        bound_rhs: bound_constant * d.eps0 * d.eps0 * delta * delta * d.lambda * d.lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiRow {
    pub lambda: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub k: usize,
    pub tail_mass: f64,
    pub mi_nats: f64,
    pub error_budget: f64,
}

/// Evaluates the pair mutual information with `eps0 = eps`,
/// `eps1 = eps + delta` on the full grid.
pub fn mi_grid(lambdas: &[f64], epss: &[f64], deltas: &[f64], tail_tol: f64) -> Result<Vec<MiRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        for &eps in epss {
            for &delta in deltas {
                let d = pair_joint(lambda, eps, eps + delta, tail_tol)?;
                let mi = mutual_info_pair(&d, 1.0);
                rows.push(MiRow {
                    lambda,
                    eps0: d.eps0,
                    eps1: d.eps1,
                    k: d.k,
                    tail_mass: d.tail_mass,
                    mi_nats: mi.value,
                    error_budget: mi.error_budget,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_mi_csv<W: Write>(rows: &[MiRow], header_comment: &str, mut out: W) -> Result<()> {
    for line in header_comment.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "eps0", "eps1", "K", "tail_mass", "mi_nats", "error_budget"])?;
    for r in rows {
        w.write_record([
            format!("{:?}", r.lambda),
            format!("{:?}", r.eps0),
            format!("{:?}", r.eps1),
            r.k.to_string(),
            format!("{:?}", r.tail_mass),
            format!("{:?}", r.mi_nats),
            format!("{:?}", r.error_budget),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_instance, InstanceSpec};
    use crate::stats::{exact_uniform_mean, tv_statistic};

    fn tv(b: &SampleBatch) -> f64 {
        tv_statistic(b).unwrap().value
    }

    #[test]
    fn brute_force_examples() {
        let u2 = Pmf::uniform(2).unwrap();
        assert!((brute_force_mean_statistic(&u2, 2, tv).unwrap() - 0.25).abs() < 1e-15);
        let u3 = Pmf::uniform(3).unwrap();
        assert!((brute_force_mean_statistic(&u3, 1, tv).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let point = make_instance(&InstanceSpec::point_mass(5)).unwrap();
        for m in 1..5 {
            assert!((brute_force_mean_statistic(&point, m, tv).unwrap() - 0.8).abs() < 1e-15);
        }
        assert!(matches!(
            brute_force_mean_statistic(&Pmf::uniform(10).unwrap(), 8, tv),
            Err(Error::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn composition_enumeration_matches_sequences() {
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for m in 1..=6u32 {
            let a = brute_force_mean_statistic(&p, m, tv).unwrap();
            let b = composition_mean_statistic(&p, m as u64, tv).unwrap();
            assert!((a - b).abs() < 1e-13, "m={m}: {a} vs {b}");
        }
        let sparse = Pmf::new(vec![0.5, 0.0, 0.5]).unwrap();
        let a = brute_force_mean_statistic(&sparse, 4, tv).unwrap();
        let b = composition_mean_statistic(&sparse, 4, tv).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn brute_force_agrees_with_exact_uniform_mean() {
        for n in 2..=5usize {
            let u = Pmf::uniform(n).unwrap();
            for m in 1..=7u32 {
                let brute = brute_force_mean_statistic(&u, m, tv).unwrap();
                let exact = exact_uniform_mean(n, m as u64).unwrap();
                assert!((brute - exact).abs() < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn far_instances_sit_above_the_uniform_mean() {
        // Small brute-force check that E_p[S] >= mu(U_n) for a spread of p.
        for n in [2usize, 4, 6, 10, 20, 50] {
            let m_max = match n {
                2 | 4 => 8,
                6 => 7,
                10 => 5,
                20 => 4,
                _ => 3,
            };
            let mut family = vec![
                make_instance(&InstanceSpec::paired_bias(n, 0.3)).unwrap(),
                make_instance(&InstanceSpec::paired_bias(n, 1.0)).unwrap(),
                make_instance(&InstanceSpec::heavy_element(n, 0.5)).unwrap(),
            ];
            let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
            let s: f64 = ramp.iter().sum();
            family.push(Pmf::new(ramp.iter().map(|x| x / s).collect()).unwrap());
            for m in 1..=m_max {
                let mu = exact_uniform_mean(n, m).unwrap();
                for p in &family {
                    let e = composition_mean_statistic(p, m, tv).unwrap();
                    assert!(e >= mu - 1e-12, "n={n} m={m} p={:?}", p.probs());
                }
            }
        }
    }

    #[test]
    fn pushforward_examples() {
        let u2 = Pmf::uniform(2).unwrap();
        let out = exact_pushforward(&u2, &u2).unwrap();
        assert_eq!(out.n(), 12);
        assert!(out.probs().iter().all(|x| (x - 1.0 / 12.0).abs() < 1e-15));

        let one = Pmf::new(vec![1.0]).unwrap();
        let out = exact_pushforward(&one, &one).unwrap();
        assert!(out.probs().iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));

        let q = Pmf::new(vec![0.75, 0.25]).unwrap();
        let p = Pmf::new(vec![0.25, 0.75]).unwrap();
        let out = exact_pushforward(&q, &p).unwrap();
        let far = tv_distance(&out, &Pmf::uniform(12).unwrap()).unwrap();
        assert!(far >= tv_distance(&p, &q).unwrap() / 3.0 - 1e-12);
        assert!(far >= 1.0 / 6.0 - 1e-12);
    }

    #[test]
    fn sampled_reduction_matches_exact_pushforward() {
        use crate::rng::{derive_stream, Role};
        use crate::dist::Sampler;
        let q = Pmf::new(vec![0.5, 0.125, 0.375]).unwrap();
        let p = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let exact = exact_pushforward(&q, &p).unwrap();
        let r = IdentityReduction::new(&q);
        let sampler = Sampler::new(p);
        let mut rng = derive_stream(17, 0, 0, Role::Sample);
        let draws = 400_000usize;
        let mut counts = [0u64; 18];
        for _ in 0..draws {
            counts[r.reduce(sampler.draw_one(&mut rng), &mut rng)] += 1;
        }
        for (c, &pe) in counts.iter().zip(exact.probs()) {
            let sd = (pe * (1.0 - pe) / draws as f64).sqrt();
            let freq = *c as f64 / draws as f64;
            assert!((freq - pe).abs() < 5.0 * sd + 1e-12, "{freq} vs {pe}");
        }
    }

    #[test]
    fn rational_family_sizes() {
        // Denominators 1..=2 on [2]: (1,0), (0,1), (1/2,1/2).
        assert_eq!(rational_pmfs(2, 2).len(), 3);
        assert_eq!(rational_pmfs(1, 8).len(), 1);
        // On [2] every k/d with d <= 8 in [0, 1]: the Farey sequence F_8 has 23 terms.
        assert_eq!(rational_pmfs(2, 8).len(), 23);
    }

    #[test]
    fn small_reduction_scan_passes() {
        let scan = reduction_scan(3, 4, 1e-12).unwrap();
        assert!(scan.passed(), "{:?}", scan.failures);
        assert!(scan.min_far_slack >= -1e-12);
    }

    #[test]
    fn pair_joint_examples() {
        let d = pair_joint(0.7, 0.2, 0.2, 1e-14).unwrap();
        assert_eq!(d.joint[0], d.joint[1]);
        assert!(d.tail_mass <= 1e-14);

        let d = pair_joint(1.0, 0.0, 0.0, 1e-14).unwrap();
        let e2 = (-2.0f64).exp();
        for a in 0..5 {
            for b in 0..5 {
                let expected = e2 / (ln_factorial(a as u64).exp() * ln_factorial(b as u64).exp());
                assert!((d.get(0, a, b) - expected).abs() < 1e-15);
            }
        }
        for x in 0..2 {
            let total: f64 = d.joint[x].iter().sum();
            assert!((total - (1.0 - d.tail[x])).abs() < 1e-13);
        }
    }

    #[test]
    fn pair_joint_marginals() {
        let d = pair_joint(0.5, 0.1, 0.3, 1e-14).unwrap();
        for (x, eps) in [(0usize, 0.1), (1, 0.3)] {
            let (hi, lo) = (0.5 * (1.0 + eps), 0.5 * (1.0 - eps));
            for a in 0..=d.k {
                let row: f64 = (0..=d.k).map(|b| d.get(x, a, b)).sum();
                let col: f64 = (0..=d.k).map(|b| d.get(x, b, a)).sum();
                let direct = 0.5 * (ln_poisson(a, hi).exp() + ln_poisson(a, lo).exp());
                assert!((row - direct).abs() < 1e-14, "x={x} a={a}");
                assert!((col - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_joint_errors() {
        assert!(pair_joint(0.0, 0.1, 0.2, 1e-14).is_err());
        assert!(pair_joint(1.0, 0.3, 0.2, 1e-14).is_err());
        assert!(pair_joint(1.0, 0.1, 1.0, 1e-14).is_err());
        assert!(matches!(
            pair_joint(50_000.0, 0.1, 0.2, 1e-14),
            Err(Error::TruncationCap { .. })
        ));
    }

    #[test]
    fn mutual_info_basics() {
        let zero = mutual_info_pair(&pair_joint(1.0, 0.2, 0.2, 1e-14).unwrap(), 1.0);
        assert_eq!(zero.value, 0.0);
        assert!(zero.error_budget <= 1e-12);

        let mut last = 0.0;
        for delta in [0.01, 0.02, 0.05, 0.1, 0.2, 0.4] {
            let v = mutual_info_pair(&pair_joint(1.0, 0.2, 0.2 + delta, 1e-14).unwrap(), 1.0).value;
            assert!(v > last);
            assert!(v <= std::f64::consts::LN_2);
            last = v;
        }
    }

    #[test]
    fn series_matches_direct_entropy_term() {
        for d in [1e-3, 5e-3, 9e-3] {
            let direct = (1.0 + d) * (1.0f64 + d).ln() + (1.0 - d) * (1.0f64 - d).ln();
            assert!((symmetric_entropy_term(d) - direct).abs() < 1e-15);
        }
        assert_eq!(symmetric_entropy_term(0.0), 0.0);
    }

    /// Independent route: the textbook `sum_x 1/2 P_x ln(P_x / Pbar)`.
    fn naive_mi(d: &PairJointDist) -> f64 {
        let mut acc = 0.0;
        for (p0, p1) in d.joint[0].iter().zip(&d.joint[1]) {
            let bar = 0.5 * (p0 + p1);
            for p in [p0, p1] {
                if *p > 0.0 {
                    acc += 0.5 * p * (p / bar).ln();
                }
            }
        }
        acc
    }

    #[test]
    fn mutual_info_matches_naive_formula() {
        for (lambda, e0, e1) in [(1.0, 0.1, 0.5), (0.5, 0.0, 0.9), (3.0, 0.2, 0.3)] {
            let d = pair_joint(lambda, e0, e1, 1e-14).unwrap();
            let a = mutual_info_pair(&d, 1.0).value;
            let b = naive_mi(&d);
            assert!((a - b).abs() < 1e-12 * a.max(1e-6), "{a} vs {b}");
        }
    }

    #[test]
    fn mi_csv_layout() {
        let rows = mi_grid(&[0.5], &[0.1], &[0.01, 0.02], 1e-14).unwrap();
        let mut out = Vec::new();
        write_mi_csv(&rows, "grid=test", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# grid=test"));
        assert_eq!(lines.next(), Some("lambda,eps0,eps1,K,tail_mass,mi_nats,error_budget"));
        assert_eq!(lines.count(), 2);
    }
}
