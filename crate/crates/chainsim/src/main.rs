//! Command-line surface: simulate / sweep / walk / verify-lemmas / fit.

use chainsim::harness::{
    self, parse_config_str, parse_sweep_csv, run_experiment, sweep, sweep_csv, ExperimentConfig,
    HarnessError, LemmaSelect,
};
use chainsim::metrics::{fit_scaling, FitResult, ScalingModel};
use chainsim::policies::{PolicyConfig, TieBreak};
use chainsim::randwalk::{walk_report, WalkParams};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chainsim",
    about = "Altruistic-donor chain matching simulator and verifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// greedy | clear_all | batch | nasp | greedy_batch | multi_greedy
    #[arg(long)]
    policy: Option<String>,
    /// Phase parameter for batch / nasp / greedy_batch.
    #[arg(long)]
    c: Option<f64>,
    /// Donor count for multi_greedy.
    #[arg(long)]
    donors: Option<u32>,
    /// lowest_index | uniform (multi_greedy).
    #[arg(long)]
    tie_break: Option<String>,
    /// NASP threshold-check stride override.
    #[arg(long)]
    nasp_check_stride: Option<u32>,
    /// CLEAR-ALL per-arrival restart budget override.
    #[arg(long)]
    clear_all_restarts: Option<u32>,
}

impl PolicyArgs {
    fn build(&self, name: &str) -> Result<PolicyConfig, HarnessError> {
        let tie = match self.tie_break.as_deref() {
            None | Some("lowest_index") => TieBreak::LowestIndex,
            Some("uniform") => TieBreak::Uniform,
            Some(other) => return Err(HarnessError::BadConfig(format!("bad tie_break: {other}"))),
        };
        Ok(match name {
            "greedy" => PolicyConfig::Greedy,
            "clear_all" => PolicyConfig::ClearAll {
                restarts_per_arrival: self.clear_all_restarts,
            },
            "batch" => PolicyConfig::Batch {
                c: self.c.unwrap_or(12.0),
            },
            "nasp" => PolicyConfig::Nasp {
                c: self.c.unwrap_or(120.0),
                check_stride: self.nasp_check_stride,
            },
            "greedy_batch" => PolicyConfig::GreedyBatch {
                c: self.c.unwrap_or(12.0),
            },
            "multi_greedy" => PolicyConfig::MultiGreedy {
                donors: self.donors.unwrap_or(1),
                tie_break: tie,
            },
            other => return Err(HarnessError::BadConfig(format!("unknown policy: {other}"))),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (optionally from a key=value config file).
    Simulate {
        /// Flat key=value config file; CLI flags override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        p: Option<f64>,
        /// Horizon T (defaults to the policy-aware desk-scale value).
        #[arg(long)]
        t: Option<u64>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for summary.json / pernode_rep*.csv / trace_rep*.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Probe step for the expected-additional-waiting-time diagnostic.
        #[arg(long)]
        probe_tau: Option<u64>,
        /// Also export the per-event trace CSV per replication.
        #[arg(long)]
        trace: bool,
    },
    /// Run a policy set over a p-grid and write sweep.csv.
    Sweep {
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',', default_value = "greedy,batch")]
        policies: Vec<String>,
        #[command(flatten)]
        policy_args: PolicyArgs,
        /// Comma-separated p values.
        #[arg(
            long = "p-grid",
            value_delimiter = ',',
            default_value = "0.02,0.05,0.1,0.2"
        )]
        p_grid: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        replications: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Horizon override for every cell.
        #[arg(long)]
        t: Option<u64>,
        /// Output directory (sweep.csv lands here).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve and simulate the drift walk; JSON report to stdout or --out.
    Walk {
        #[arg(long, default_value_t = 50)]
        m: u64,
        #[arg(long, default_value_t = 20.0)]
        k: f64,
        #[arg(long, default_value_t = 0.06)]
        rho: f64,
        /// Defaults to rho*k - 1.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Tail-bound deltas to check empirically.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.2")]
        deltas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo / exhaustive verification of the path lemmas.
    VerifyLemmas {
        /// all | random-m | dfs-path | gnp-path | dense-queue
        #[arg(long, default_value = "all")]
        which: LemmaSelect,
        /// Override the per-lemma default trial counts.
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON report path (written in addition to stdout).
        #[arg(long, default_value = "lemmas.json")]
        out: PathBuf,
    },
    /// Fit scaling laws to a sweep.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct FitRow {
    policy: String,
    points: usize,
    one_over_p: FitResult,
    one_over_p_log: FitResult,
    better: &'static str,
}

fn run() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            policy,
            p,
            t,
            replications,
            seed,
            out,
            probe_tau,
            trace,
        } => {
            let mut cfg: ExperimentConfig = match &config {
                Some(path) => parse_config_str(&std::fs::read_to_string(path)?)?,
                None => {
                    let name = policy.policy.clone().ok_or_else(|| {
                        HarnessError::BadConfig("need --policy or --config".into())
                    })?;
                    let p = p.ok_or_else(|| HarnessError::BadConfig("need --p".into()))?;
                    ExperimentConfig::new(policy.build(&name)?, p)
                }
            };
            if config.is_some() {
                if let Some(name) = &policy.policy {
                    cfg.policy = policy.build(name)?;
                }
                if let Some(p) = p {
                    cfg.p = p;
                }
            }
            if let Some(t) = t {
                cfg.t_horizon = Some(t);
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(dir) = out {
                cfg.out_dir = Some(dir);
            }
            if probe_tau.is_some() {
                cfg.probe_tau = probe_tau;
            }
            cfg.write_trace |= trace;
            let output = run_experiment(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&output.aggregate).expect("serializable")
            );
            eprintln!(
                "policy={} p={} t={} reps={} mean_wait={:.3}",
                cfg.policy.label(),
                cfg.p,
                output.t_horizon,
                cfg.replications,
                output.aggregate.mean_wait.mean
            );
            Ok(())
        }
        Command::Sweep {
            policies,
            policy_args,
            p_grid,
            replications,
            seed,
            t,
            out,
        } => {
            let mut configs = Vec::new();
            for name in &policies {
                configs.push(policy_args.build(name)?);
            }
            let output = sweep(&configs, &p_grid, replications, seed, t);
            std::fs::create_dir_all(&out)?;
            let csv = sweep_csv(&output);
            std::fs::write(out.join("sweep.csv"), &csv)?;
            print!("{csv}");
            for err in &output.errors {
                eprintln!("sweep cell failed: {err}");
            }
            if output.errors.is_empty() {
                Ok(())
            } else {
                Err(HarnessError::Run(format!(
                    "{} sweep cell(s) failed",
                    output.errors.len()
                )))
            }
        }
        Command::Walk {
            m,
            k,
            rho,
            beta,
            steps,
            seed,
            deltas,
            out,
        } => {
            let params = match beta {
                Some(beta) => WalkParams::new(m, k, rho, beta),
                None => WalkParams::from_drop(m, k, rho),
            }
            .map_err(|e| HarnessError::BadConfig(e.to_string()))?;
            let report = walk_report(&params, steps, seed, &deltas)
                .map_err(|e| HarnessError::Run(e.to_string()))?;
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            println!("{text}");
            if let Some(path) = out {
                harness::write_json(&path, &report)?;
            }
            Ok(())
        }
        Command::VerifyLemmas {
            which,
            trials,
            seed,
            out,
        } => {
            let report = harness::verify_lemmas(which, trials, seed);
            for o in &report.outcomes {
                println!(
                    "{}: {}/{} = {:.4} (need >= {:.4}) {} [{}]",
                    o.name,
                    o.successes,
                    o.trials,
                    o.frequency,
                    o.threshold,
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
            }
            harness::write_json(&out, &report)?;
            if report.pass {
                Ok(())
            } else {
                Err(HarnessError::LemmaFailure(
                    report
                        .outcomes
                        .iter()
                        .filter(|o| !o.pass)
                        .map(|o| o.name.clone())
                        .collect::<Vec<_>>()
                        .join(", "),
                ))
            }
        }
        Command::Fit { input, out } => {
            let rows = parse_sweep_csv(&std::fs::read_to_string(&input)?)?;
            let mut by_policy: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for (policy, p, mean_wait) in rows {
                match by_policy.iter_mut().find(|(name, _)| *name == policy) {
                    Some((_, pts)) => pts.push((p, mean_wait)),
                    None => by_policy.push((policy, vec![(p, mean_wait)])),
                }
            }
            let mut fits = Vec::new();
            for (policy, points) in by_policy {
                let inv = fit_scaling(&points, ScalingModel::OneOverP)
                    .map_err(|e| HarnessError::Run(format!("{policy}: {e}")))?;
                let invlog = fit_scaling(&points, ScalingModel::OneOverPLog)
                    .map_err(|e| HarnessError::Run(format!("{policy}: {e}")))?;
                fits.push(FitRow {
                    policy,
                    points: points.len(),
                    better: if invlog.residual_score < inv.residual_score {
                        "one_over_p_log"
                    } else {
                        "one_over_p"
                    },
                    one_over_p: inv,
                    one_over_p_log: invlog,
                });
            }
            let text = serde_json::to_string_pretty(&fits).expect("serializable");
            println!("{text}");
            if let Some(path) = out {
                harness::write_json(&path, &fits)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
