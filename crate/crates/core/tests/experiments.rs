use std::sync::Arc;

use reptest_core::harness::{
    acceptance_sweep, calibrate, correctness_experiment, replicability_experiment, Prior,
    DEFAULT_PILOT_GRID,
};
use reptest_core::tester::IdentityTester;
use reptest_core::{
    make_instance, run_tester, Constants, Decision, InstanceSpec, Pmf, Sampler, SeedSplit,
    TesterParams,
};

fn params(n: usize, eps: f64, rho: f64) -> TesterParams {
    TesterParams::new(n, eps, rho, Constants::default()).unwrap()
}

#[test]
fn shipped_constants_match_a_fresh_calibration() {
    let cal = calibrate(&DEFAULT_PILOT_GRID, 0.2, 400, 0x5EED, Constants::default(), 4).unwrap();
    let rounded = format!("{:.3}", cal.constants.c_gap);
    assert_eq!(rounded.parse::<f64>().unwrap(), Constants::default().c_gap, "{}", cal.provenance);
    for p in &cal.pilots {
        assert!(p.c_min < cal.constants.c_gap && cal.constants.c_gap < p.c_max);
    }
}

#[test]
fn persisted_constants_reproduce_the_tester() {
    let cal = calibrate(&[(300, 0.3)], 0.2, 60, 4, Constants::default(), 2).unwrap();
    let dir = std::env::temp_dir().join(format!("reptest-cal-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("constants.cfg");
    cal.constants.save(&path, &cal.provenance).unwrap();
    let loaded = Constants::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(loaded, cal.constants);

    let sampler = Sampler::new(make_instance(&InstanceSpec::paired_bias(300, 0.2)).unwrap());
    let a = TesterParams::new(300, 0.3, 0.2, cal.constants).unwrap();
    let b = TesterParams::new(300, 0.3, 0.2, loaded).unwrap();
    for seed in 0..5 {
        assert_eq!(
            run_tester(&sampler, &a, SeedSplit::from_seed(seed)).unwrap(),
            run_tester(&sampler, &b, SeedSplit::from_seed(seed)).unwrap()
        );
    }
}

#[test]
fn uniform_prior_agreement_beats_union_bound() {
    let p = params(1000, 0.25, 0.2);
    let prior = Prior::Fixed {
        instance: InstanceSpec::uniform(1000),
    };
    let r = replicability_experiment(&prior, &p, 200, 21, false, 4).unwrap();
    assert!(r.rate >= 1.0 - 2.0 * 0.2, "rate {}", r.rate);
}

#[test]
fn shared_samples_on_any_fixed_instance_agree_exactly() {
    let p = params(400, 0.3, 0.2);
    for spec in [
        InstanceSpec::paired_bias(400, 0.3),
        InstanceSpec::heavy_element(400, 0.05),
    ] {
        let prior = Prior::Fixed { instance: spec };
        let r = replicability_experiment(&prior, &p, 50, 22, true, 3).unwrap();
        assert_eq!(r.rate, 1.0);
    }
}

#[test]
fn sweep_endpoints_and_monotone_shape() {
    let p = params(1000, 0.25, 0.2);
    let grid: Vec<f64> = (0..11).map(|i| i as f64 * 0.05).collect();
    let curve = acceptance_sweep(&p, &grid, 100, 23, false, 4).unwrap();
    assert!(curve.acc_estimates[0] >= 0.8);
    assert!(*curve.acc_estimates.last().unwrap() <= 0.2);
    for (j, w) in curve.acc_estimates.windows(2).enumerate() {
        let sigma = ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / 100.0).sqrt().max(0.01);
        assert!(w[1] <= w[0] + 3.0 * sigma, "increase at point {j}: {w:?}");
    }
    assert!(curve.acc_estimates.iter().all(|a| (0.0..=1.0).contains(a)));
}

#[test]
fn frozen_coin_sweep_has_a_crossing() {
    let p = params(1000, 0.25, 0.2);
    let grid: Vec<f64> = (0..11).map(|i| i as f64 * 0.05).collect();
    let curve = acceptance_sweep(&p, &grid, 60, 24, true, 4).unwrap();
    assert!(curve.acc_estimates[0] > 0.5 && *curve.acc_estimates.last().unwrap() < 0.5);
    let x = curve.crossing_point(0.5).unwrap();
    assert!(x > 0.0 && x < 0.5);
}

#[test]
fn correctness_reports_are_worker_independent() {
    let p = params(500, 0.3, 0.2);
    let spec = InstanceSpec::paired_bias(500, 0.4);
    let one = correctness_experiment(&spec, &p, 40, 25, Decision::Reject, 1).unwrap();
    let many = correctness_experiment(&spec, &p, 40, 25, Decision::Reject, 7).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.summary_json(), many.summary_json());
}

#[test]
fn identity_tester_accepts_an_arbitrary_reference() {
    let n = 200;
    let p = params(n, 0.3, 0.2);
    // A lopsided reference with some zero entries.
    let raw: Vec<f64> = (0..n).map(|i| if i % 7 == 0 { 0.0 } else { (i % 5 + 1) as f64 }).collect();
    let total: f64 = raw.iter().sum();
    let q = Pmf::new(raw.iter().map(|x| x / total).collect()).unwrap();
    let tester = IdentityTester::new(&q, &p).unwrap();
    let sampler = Arc::new(Sampler::new(q));
    let accepts = (0..200)
        .filter(|&t| {
            let v = tester.run(sampler.clone(), SeedSplit::for_trial(26, t, 0)).unwrap();
            v.decision == Decision::Accept
        })
        .count();
    assert!(accepts as f64 / 200.0 >= 0.8, "accepts {accepts}");
}
