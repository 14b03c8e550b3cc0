//! `ve-infer`: run simulation suites, real-data inference and sampler
//! self-checks from the command line.
//!
//! Exit status is 0 on success, 1 when a self-check fails or a file cannot
//! be written, and 2 when the arguments or inputs are invalid.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ve_core::checks::{convergence_run, oracle_check, OracleCheckConfig};
use ve_core::config::resolve_prior;
use ve_core::generator::{ObservationRegime, UnseenAssumption};
use ve_core::harness::{
    default_samples, run_real_data, run_suite, RealDataConfig, SuiteConfig, REAL_DATA_SAMPLES,
};
use ve_core::report::{emit_report, write_csv, ReportFormat};
use ve_core::sampler::{ChainConfig, StartMode};
use ve_core::{Error, PriorName};

#[derive(Parser)]
#[command(name = "ve-infer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Prior,
    Truth,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicated cohorts and compare estimators with the posterior.
    Suite {
        /// Prior name (wide_open, prior1, prior2, prior3) or a TOML prior file.
        #[arg(long, default_value = "wide_open")]
        prior: String,
        /// Cohort size.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Gibbs sweeps per replication [default: max(N, 1000)].
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path prefix; each format is written to `<out>.<ext>`.
        /// Without it the CSV goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated list of csv, json, svg.
        #[arg(long, default_value = "csv,json,svg")]
        format: String,
        /// Worker threads [default: $VE_INFER_THREADS, then all cores].
        #[arg(long)]
        threads: Option<usize>,
        /// Test everyone with this probability instead of testing only the
        /// hospitalised.
        #[arg(long)]
        test_probability: Option<f64>,
        #[arg(long, value_enum, default_value = "prior")]
        start: Start,
    },
    /// Posterior inference on the embedded 2021 hospital table.
    Real {
        /// How unseen individuals are split by vaccination status (1, 2 or 3).
        #[arg(long)]
        assumption: u8,
        #[arg(long, default_value_t = REAL_DATA_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Unseen individuals as a multiple of the hospitalised count.
        #[arg(long, default_value_t = 2.0)]
        unseen_multiple: f64,
        /// Write the full chain trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare Gibbs and exact posterior centiles on tiny random datasets.
    OracleCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// Post-burn-in Gibbs samples per instance.
        #[arg(long, default_value_t = 50_000)]
        gibbs_samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        exact_draws: usize,
        /// Largest allowed centile difference, in nats.
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
    },
    /// Run chains from the prior and from the truth on one simulated cohort.
    Convergence {
        #[arg(long, default_value = "wide_open")]
        prior: String,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Recorded samples per chain [default: max(N, 1000)].
        #[arg(long)]
        samples: Option<usize>,
        /// Sweeps per recorded sample.
        #[arg(long, default_value_t = 1)]
        thinning: usize,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    CheckFailed,
}

fn parse_formats(list: &str) -> Result<Vec<ReportFormat>, Error> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn label_for(prior: &str) -> String {
    prior
        .parse::<PriorName>()
        .map(|p| p.to_string())
        .unwrap_or_else(|_| prior.to_string())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Suite {
            prior,
            n,
            reps,
            samples,
            seed,
            out,
            format,
            threads,
            test_probability,
            start,
        } => {
            let formats = parse_formats(&format)?;
            let cfg = SuiteConfig {
                label: label_for(&prior),
                prior: resolve_prior(&prior)?,
                n,
                reps,
                n_samples: samples.unwrap_or_else(|| default_samples(n)),
                base_seed: seed,
                regime: match test_probability {
                    Some(test_probability) => ObservationRegime::RandomTesting { test_probability },
                    None => ObservationRegime::Spontaneous,
                },
                start_mode: match start {
                    Start::Prior => StartMode::FromPrior,
                    Start::Truth => StartMode::FromTruth,
                },
                keep_samples: 200,
                threads,
            };
            let report = run_suite(&cfg)?;
            let s = &report.summary;
            eprintln!(
                "{} N={}: n_t1_better={}/{} sd_t1={:.3} sd_t2={:.3} mean_width={:.3} mean_n_hosp={:.1}",
                report.label,
                report.n,
                s.n_t1_better,
                s.n_runs,
                s.sd_t1_error,
                s.sd_t2_error,
                s.mean_ci_width,
                s.mean_n_hosp
            );
            match out {
                Some(prefix) => {
                    for f in formats {
                        let path = prefix.with_extension(f.extension());
                        emit_report(&report, f, &path)
                            .with_context(|| format!("writing {}", path.display()))?;
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => write_csv(&report.records, io::stdout().lock())?,
            }
            Ok(Outcome::Ok)
        }
        Command::Real {
            assumption,
            samples,
            seed,
            unseen_multiple,
            trace,
        } => {
            let cfg = RealDataConfig {
                assumption: UnseenAssumption::from_index(assumption)?,
                n_samples: samples,
                seed,
                unseen_multiple,
            };
            let result = run_real_data(&cfg)?;
            let r = &result.record;
            let mut out = io::stdout().lock();
            writeln!(out, "assumption {assumption}, {} hospitalised", r.n_hosp)?;
            writeln!(
                out,
                "log odds ratio: t1={:.3} t2={:.3} centiles=({:.2}, {:.2})",
                r.t1, r.t2, r.c2_5, r.c97_5
            )?;
            writeln!(
                out,
                "effectiveness %: e1={:.1} e2={:.1} centiles=({:.1}, {:.1})",
                r.e1, r.e2, r.e_c2_5, r.e_c97_5
            )?;
            writeln!(out, "{}", serde_json::to_string(r)?)?;
            if result.trace.clamp_events > 0 {
                eprintln!(
                    "{} probability draws were clamped",
                    result.trace.clamp_events
                );
            }
            if let Some(path) = trace {
                let file = std::fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                result.trace.write_csv(io::BufWriter::new(file))?;
                eprintln!("wrote {}", path.display());
            }
            Ok(Outcome::Ok)
        }
        Command::OracleCheck {
            seed,
            instances,
            gibbs_samples,
            exact_draws,
            tolerance,
        } => {
            let cfg = OracleCheckConfig {
                instances,
                gibbs_samples,
                exact_draws,
            };
            let rows = oracle_check(&[PriorName::WideOpen, PriorName::Prior1], &cfg, seed)?;
            let mut out = io::stdout().lock();
            writeln!(
                out,
                "prior      inst  n  gibbs (2.5, 97.5)   exact (2.5, 97.5)   diff"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{:<10} {:>4} {:>2}  ({:>6.2}, {:>6.2})    ({:>6.2}, {:>6.2})    {:.3}{}",
                    r.prior,
                    r.instance,
                    r.individuals,
                    r.gibbs.0,
                    r.gibbs.1,
                    r.exact.0,
                    r.exact.1,
                    r.max_diff,
                    if r.within(tolerance) { "" } else { "  FAIL" }
                )?;
            }
            let pass = rows.iter().all(|r| r.within(tolerance));
            writeln!(out, "{}", if pass { "PASS" } else { "FAIL" })?;
            Ok(if pass {
                Outcome::Ok
            } else {
                Outcome::CheckFailed
            })
        }
        Command::Convergence {
            prior,
            n,
            seed,
            samples,
            thinning,
        } => {
            let mut cfg = ChainConfig::new(samples.unwrap_or_else(|| default_samples(n)));
            cfg.thinning = thinning;
            let run = convergence_run(&resolve_prior(&prior)?, n, &cfg, seed)?;
            let mut out = io::stdout().lock();
            writeln!(
                out,
                "seed {} t0_true={:.3} n_hosp={} sweeps={}",
                run.seed,
                run.t0_true,
                run.n_hosp,
                cfg.n_samples * cfg.thinning
            )?;
            writeln!(
                out,
                "quantity      mean_diff  c2_5_diff  c97_5_diff  tolerance"
            )?;
            for q in &run.report.quantities {
                writeln!(
                    out,
                    "{:<12} {:>10.4} {:>10.4} {:>11.4} {:>10.2}  {}",
                    q.quantity,
                    q.mean_diff,
                    q.c2_5_diff,
                    q.c97_5_diff,
                    q.tolerance,
                    if q.pass { "ok" } else { "FAIL" }
                )?;
            }
            writeln!(out, "{}", if run.report.pass { "PASS" } else { "FAIL" })?;
            Ok(if run.report.pass {
                Outcome::Ok
            } else {
                Outcome::CheckFailed
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid_input = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::InvalidArgument(_) | Error::Domain(_) | Error::Parse(_))
            );
            ExitCode::from(if invalid_input { 2 } else { 1 })
        }
    }
}
