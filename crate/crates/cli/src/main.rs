//! `reptest`: command-line front end for the replicable uniformity tester.
//!
//! Exit codes: 0 accept / success, 1 reject / failed gate, 2 usage or
//! configuration error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reptest_core::analysis::{mi_grid, reduction_scan, write_mi_csv, DEFAULT_TAIL_TOL};
use reptest_core::harness::{
    acceptance_sweep, barrier_experiment, calibrate, correctness_experiment,
    replicability_experiment, BarrierStat, Prior, DEFAULT_PILOT_GRID,
};
use reptest_core::{
    make_instance, run_tester, Constants, Decision, Error, InstanceSpec, Pmf, SeedSplit,
    Sampler, TesterParams,
};

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser)]
#[command(name = "reptest", version, about = "Replicable uniformity testing toolkit")]
struct Cli {
    /// Constants file (key=value). Falls back to $REPTEST_CONSTANTS, then the
    /// built-in calibrated defaults.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tester once and print the verdict as JSON.
    Test(TestArgs),
    #[command(subcommand)]
    Experiment(Experiment),
    /// Fit the gap constant on a pilot grid and write a constants file.
    Calibrate(CalibrateArgs),
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Uniform,
    PointMass,
    PairedBias,
    HeavyElement,
}

#[derive(Args)]
struct InstanceArgs {
    /// Built-in instance family.
    #[arg(long, value_enum, conflicts_with = "pmf_file")]
    instance: Option<Preset>,
    /// Bias for paired-bias.
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    /// Heavy-element mass; defaults to n^{-1/2}.
    #[arg(long)]
    mass: Option<f64>,
    /// Explicit pmf: JSON `{"n":..,"probs":[..]}` or one probability per line.
    #[arg(long)]
    pmf_file: Option<PathBuf>,
}

impl InstanceArgs {
    fn spec(&self, n: usize) -> reptest_core::Result<InstanceSpec> {
        if let Some(path) = &self.pmf_file {
            let pmf = read_pmf(path)?;
            if pmf.n() != n {
                return Err(Error::DomainMismatch { left: pmf.n(), right: n });
            }
            return Ok(InstanceSpec::new(
                n,
                reptest_core::InstanceKind::Custom {
                    probs: pmf.probs().to_vec(),
                },
            ));
        }
        Ok(match self.instance.unwrap_or(Preset::Uniform) {
            Preset::Uniform => InstanceSpec::uniform(n),
            Preset::PointMass => InstanceSpec::point_mass(n),
            Preset::PairedBias => InstanceSpec::paired_bias(n, self.xi),
            Preset::HeavyElement => {
                InstanceSpec::heavy_element(n, self.mass.unwrap_or(1.0 / (n as f64).sqrt()))
            }
        })
    }
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    rho: f64,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for CSV and JSON files; CSV goes to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit 1 when the success rate falls below this value.
    #[arg(long)]
    assert_rate: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Accept,
    Reject,
}

#[derive(Subcommand)]
enum Experiment {
    /// Repeated runs on one instance against a declared expected decision.
    Correctness {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value = "accept")]
        expect: Expect,
        #[arg(long, default_value_t = 400)]
        trials: u64,
    },
    /// Paired runs sharing internal randomness; success means agreement.
    Replicability {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1000)]
        pairs: u64,
        /// Upper end of the paired-bias prior; defaults to 2 eps.
        #[arg(long)]
        max_xi: Option<f64>,
        /// Reuse the sample stream in both runs (control).
        #[arg(long)]
        shared_samples: bool,
    },
    /// Acceptance probability along a grid of paired-bias strengths.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// `start:stop:points`, inclusive.
        #[arg(long, default_value = "0:0.5:21")]
        grid: String,
        #[arg(long, default_value_t = 100)]
        trials_per_point: u64,
        /// Freeze one internal stream across the whole sweep.
        #[arg(long)]
        fixed_internal: bool,
    },
    /// Run-to-run spread of a statistic on a heavy-element instance.
    Barrier {
        #[arg(long, value_enum)]
        stat: StatArg,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Comma-separated sample sizes; defaults to 9 geometric points on
        /// [4 sqrt(n), 64 sqrt(n)].
        #[arg(long, value_delimiter = ',')]
        m_grid: Option<Vec<u64>>,
        #[arg(long, default_value_t = 2000)]
        runs: u64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Collision,
    Chi2,
    Tv,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Use the built-in pilot grid (500, 0.3), (1000, 0.25), (2000, 0.2).
    #[arg(long, conflicts_with = "pilot")]
    default_grid: bool,
    /// Pilot as `n:eps`; repeatable.
    #[arg(long)]
    pilot: Vec<String>,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = 400)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Constants file to write.
    #[arg(long, default_value = "constants.cfg")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Oracle {
    /// Exhaustive exact check of the identity reduction on small rational pmfs.
    ReductionCheck {
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 8)]
        max_den: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Exact pair mutual information on a grid, as CSV.
    MiGrid {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02")]
        delta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Gate(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Gate(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = std::result::Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Gate(msg)) => {
            eprintln!("reptest: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("reptest: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let constants = resolve_constants(cli.constants.as_deref())?;
    match cli.command {
        Command::Test(args) => cmd_test(args, constants),
        Command::Experiment(e) => cmd_experiment(e, constants),
        Command::Calibrate(args) => cmd_calibrate(args, constants),
        Command::Oracle(o) => cmd_oracle(o),
    }
}

fn resolve_constants(path: Option<&Path>) -> reptest_core::Result<Constants> {
    match path {
        Some(p) => Constants::load(p),
        None => Constants::from_env_or_default(),
    }
}

fn read_pmf(path: &Path) -> reptest_core::Result<Pmf> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        Pmf::from_json(&text)
    } else {
        Pmf::from_text(&text)
    }
}

fn cmd_test(args: TestArgs, constants: Constants) -> Outcome {
    let params = TesterParams::new(args.n, args.eps, args.rho, constants)?;
    let spec = args.instance.spec(args.n)?;
    let sampler = Sampler::new(make_instance(&spec)?);
    let verdict = run_tester(&sampler, &params, SeedSplit::from_seed(args.seed))?;
    println!("{}", verdict.to_json());
    Ok(match verdict.decision {
        Decision::Accept => ExitCode::SUCCESS,
        Decision::Reject => ExitCode::from(1),
    })
}

/// Writes `csv` to `<out>/<stem>.csv` (plus optional JSON), or to stdout.
fn emit(out: Option<&Path>, stem: &str, csv: &[u8], json: Option<&str>) -> io::Result<bool> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{stem}.csv")), csv)?;
            if let Some(j) = json {
                fs::write(dir.join(format!("{stem}.json")), j)?;
            }
            Ok(true)
        }
        None => {
            io::stdout().write_all(csv)?;
            Ok(false)
        }
    }
}

fn summary(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn gate(rate: f64, assert_rate: Option<f64>) -> Outcome {
    match assert_rate {
        Some(min) if rate < min => Err(Failure::Gate(format!("rate {rate} below asserted {min}"))),
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("grid {text:?} is not start:stop:points"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let k: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(match k {
        0 => return Err(bad()),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    })
}

fn default_m_grid(n: usize) -> Vec<u64> {
    let root = (n as f64).sqrt();
    (0..9)
        .map(|i| (4.0 * root * 2f64.powf(i as f64 / 2.0)).round() as u64)
        .collect()
}

fn cmd_experiment(e: Experiment, constants: Constants) -> Outcome {
    match e {
        Experiment::Correctness {
            common,
            instance,
            expect,
            trials,
        } => {
            let params = TesterParams::new(common.n, common.eps, common.rho, constants)?;
            let spec = instance.spec(common.n)?;
            let expected = match expect {
                Expect::Accept => Decision::Accept,
                Expect::Reject => Decision::Reject,
            };
            let report =
                correctness_experiment(&spec, &params, trials, common.seed, expected, common.workers)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            let to_stdout = emit(common.out.as_deref(), "correctness", &csv, Some(&report.summary_json()))?;
            summary(
                to_stdout,
                &format!(
                    "correctness: {}/{} rate={} wilson95=[{:.4}, {:.4}]",
                    report.successes, report.trials, report.rate, report.wilson_lo, report.wilson_hi
                ),
            );
            gate(report.rate, common.assert_rate)
        }
        Experiment::Replicability {
            common,
            pairs,
            max_xi,
            shared_samples,
        } => {
            let params = TesterParams::new(common.n, common.eps, common.rho, constants)?;
            let prior = match max_xi {
                Some(max_xi) => Prior::PairedBias { max_xi },
                None => Prior::default_for(&params),
            };
            let report = replicability_experiment(
                &prior,
                &params,
                pairs,
                common.seed,
                shared_samples,
                common.workers,
            )?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            let to_stdout =
                emit(common.out.as_deref(), "replicability", &csv, Some(&report.summary_json()))?;
            summary(
                to_stdout,
                &format!(
                    "replicability: {}/{} agree rate={} wilson95=[{:.4}, {:.4}]",
                    report.successes, report.trials, report.rate, report.wilson_lo, report.wilson_hi
                ),
            );
            gate(report.rate, common.assert_rate)
        }
        Experiment::Sweep {
            common,
            grid,
            trials_per_point,
            fixed_internal,
        } => {
            let params = TesterParams::new(common.n, common.eps, common.rho, constants)?;
            let xi_grid = parse_grid(&grid)?;
            let curve = acceptance_sweep(
                &params,
                &xi_grid,
                trials_per_point,
                common.seed,
                fixed_internal,
                common.workers,
            )?;
            let mut csv = Vec::new();
            curve.write_csv(&mut csv)?;
            let json = serde_json::to_string_pretty(&curve).map_err(Error::from)?;
            let to_stdout = emit(common.out.as_deref(), "sweep", &csv, Some(&json))?;
            let crossing = curve
                .crossing_point(0.5)
                .map_or("none".to_string(), |x| format!("{x:.4}"));
            summary(
                to_stdout,
                &format!("sweep: {} points, crossing(1/2)={crossing}", curve.xi_grid.len()),
            );
            // The gate applies to acceptance at the first grid point.
            gate(curve.acc_estimates[0], common.assert_rate)
        }
        Experiment::Barrier {
            stat,
            n,
            m_grid,
            runs,
            eps,
            seed,
            workers,
            out,
        } => {
            let stat = match stat {
                StatArg::Collision => BarrierStat::Collision,
                StatArg::Chi2 => BarrierStat::Chi2,
                StatArg::Tv => BarrierStat::TvStat,
            };
            let grid = m_grid.unwrap_or_else(|| default_m_grid(n));
            let table = barrier_experiment(stat, n, &grid, runs, eps, seed, workers)?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            let json = serde_json::to_string_pretty(&table).map_err(Error::from)?;
            let to_stdout = emit(out.as_deref(), "barrier", &csv, Some(&json))?;
            summary(
                to_stdout,
                &format!("barrier {}: log-log slope of sd = {:.4}", stat.as_str(), table.slope),
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_calibrate(args: CalibrateArgs, base: Constants) -> Outcome {
    let grid: Vec<(usize, f64)> = if args.default_grid || args.pilot.is_empty() {
        DEFAULT_PILOT_GRID.to_vec()
    } else {
        args.pilot
            .iter()
            .map(|p| {
                let (n, e) = p
                    .split_once(':')
                    .ok_or_else(|| Failure::Config(format!("pilot {p:?} is not n:eps")))?;
                let n = n.parse().map_err(|_| Failure::Config(format!("bad n in {p:?}")))?;
                let e = e.parse().map_err(|_| Failure::Config(format!("bad eps in {p:?}")))?;
                Ok((n, e))
            })
            .collect::<std::result::Result<_, Failure>>()?
    };
    let cal = calibrate(&grid, args.rho, args.trials, args.seed, base, args.workers)?;
    cal.constants.save(&args.out, &cal.provenance)?;
    for p in &cal.pilots {
        println!(
            "pilot n={} eps={} m={} m0={}: c_gap in [{:.4}, {:.4}]",
            p.n, p.eps, p.m, p.m0, p.c_min, p.c_max
        );
    }
    println!("# {}", cal.provenance);
    print!("{}", cal.constants.to_kv());
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(o: Oracle) -> Outcome {
    match o {
        Oracle::ReductionCheck { max_n, max_den, tol } => {
            let scan = reduction_scan(max_n, max_den, tol)?;
            println!(
                "reduction-check max_n={} max_den={}: {} references, {} pairs, max uniform error {:e}, min far slack {:e}",
                scan.max_n,
                scan.max_den,
                scan.references,
                scan.pairs,
                scan.max_uniform_error,
                scan.min_far_slack
            );
            if scan.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                for f in scan.failures.iter().take(20) {
                    eprintln!("{f}");
                }
                Err(Failure::Gate(format!("{} checks failed", scan.failures.len())))
            }
        }
        Oracle::MiGrid {
            lambda,
            eps,
            delta,
            tail_tol,
            out,
        } => {
            let rows = mi_grid(&lambda, &eps, &delta, tail_tol)?;
            let header = format!("experiment=mi-grid\ntail_tol={tail_tol:?}");
            match out {
                Some(path) => {
                    write_mi_csv(&rows, &header, fs::File::create(&path)?)?;
                    println!("mi-grid: {} rows written to {}", rows.len(), path.display());
                }
                None => write_mi_csv(&rows, &header, io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:0.5:21").ok().unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[20], 0.5);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn default_m_grid_spans_the_barrier_range() {
        let g = default_m_grid(10_000);
        assert_eq!(g.first(), Some(&400));
        assert_eq!(g.last(), Some(&6400));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn env_var_name_is_stable() {
        assert_eq!(reptest_core::config::CONSTANTS_ENV, "REPTEST_CONSTANTS");
    }
}
