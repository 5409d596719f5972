//! Browser bindings for the chain-matching simulator.
//!
//! Three interactive operations, each returning a JSON string the page can
//! plot directly:
//!
//! - [`simulate`]: run one policy and return the queue trajectory + stats;
//! - [`walk`]: run the drift walk and return the trajectory, the empirical
//!   occupancy, the analytic stationary family, and the bounds;
//! - [`dfs_path_profile`]: DFS long-path lengths over fresh G(n, p) samples.
//!
//! Build for the web with `wasm-pack build --target web crates/chainsim-wasm`
//! and open `www/index.html`.

use chainsim::metrics::compute_summary;
use chainsim::pathfind::{dfs_longest_observed, gnp_digraph};
use chainsim::policies::{run_policy, PolicyConfig, RunConfig, TieBreak};
use chainsim::randwalk::{
    expected_value_bound, steady_state, tail_bound, walk_occupancy, WalkParams,
};
use chainsim::rng::RngStream;
use chainsim::NodeId;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_T: u64 = 200_000;
const MAX_PLOT_POINTS: usize = 2_000;

#[derive(Serialize)]
struct SimulateReport {
    policy: String,
    p: f64,
    t_horizon: u64,
    seed: u64,
    mean_wait: f64,
    mean_wait_burnin: f64,
    max_queue: u32,
    wait_p50: u32,
    wait_p90: u32,
    wait_p99: u32,
    served: u64,
    unserved: u64,
    phases: u64,
    mean_phase_length: f64,
    mean_extension_length: f64,
    /// Queue trajectory downsampled to at most MAX_PLOT_POINTS (step, q).
    queue: Vec<(u64, u32)>,
}

fn downsample(values: &[u32]) -> Vec<(u64, u32)> {
    let stride = values.len().div_ceil(MAX_PLOT_POINTS).max(1);
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0)
        .map(|(i, &q)| (i as u64 + 1, q))
        .collect()
}

fn policy_from_name(name: &str, c: f64, donors: u32) -> Result<PolicyConfig, String> {
    Ok(match name {
        "greedy" => PolicyConfig::Greedy,
        "clear_all" => PolicyConfig::ClearAll {
            restarts_per_arrival: None,
        },
        "batch" => PolicyConfig::Batch { c },
        "nasp" => PolicyConfig::Nasp {
            c,
            check_stride: None,
        },
        "greedy_batch" => PolicyConfig::GreedyBatch { c },
        "multi_greedy" => PolicyConfig::MultiGreedy {
            donors: donors.max(1),
            tie_break: TieBreak::LowestIndex,
        },
        other => return Err(format!("unknown policy: {other}")),
    })
}

/// Run one simulation and return the queue trajectory plus summary stats.
#[wasm_bindgen]
pub fn simulate(
    policy: &str,
    c: f64,
    donors: u32,
    p: f64,
    t: u32,
    seed: u64,
) -> Result<String, JsError> {
    let report = simulate_impl(policy, c, donors, p, t, seed).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&report).expect("serializable"))
}

fn simulate_impl(
    policy: &str,
    c: f64,
    donors: u32,
    p: f64,
    t: u32,
    seed: u64,
) -> Result<SimulateReport, String> {
    if !(p > 0.0 && p < 1.0) {
        return Err(format!("p = {p} outside (0, 1)"));
    }
    let t_horizon = (t as u64).clamp(1, MAX_T);
    let config = RunConfig {
        policy: policy_from_name(policy, c, donors)?,
        p,
        t_horizon,
        seed,
    };
    let run = run_policy(&config).map_err(|e| e.to_string())?;
    let summary = compute_summary(&run.sim, &run.policy_stats).map_err(|e| e.to_string())?;
    Ok(SimulateReport {
        policy: config.policy.label(),
        p,
        t_horizon,
        seed,
        mean_wait: summary.mean_wait,
        mean_wait_burnin: summary.mean_wait_burnin,
        max_queue: summary.max_queue,
        wait_p50: summary.wait_p50,
        wait_p90: summary.wait_p90,
        wait_p99: summary.wait_p99,
        served: summary.served,
        unserved: summary.unserved,
        phases: summary.phases.count,
        mean_phase_length: summary.phases.mean,
        mean_extension_length: summary.extensions.mean,
        queue: downsample(&summary.queue_conv),
    })
}

#[derive(Serialize)]
struct WalkDemoReport {
    m: u64,
    k: f64,
    rho: f64,
    beta: f64,
    x: f64,
    alpha_exact: f64,
    alpha_approx: f64,
    expected_value_bound: f64,
    tail_bound_05: f64,
    tail_bound_20: f64,
    mc_mean: f64,
    mc_max: u64,
    stationary_mean: f64,
    /// Downsampled trajectory (step, y).
    trajectory: Vec<(u64, u64)>,
    /// Empirical occupancy per level over the kept half.
    occupancy: Vec<f64>,
    /// Analytic stationary family on the same level axis.
    stationary: Vec<f64>,
}

/// Run the drift walk; returns trajectory, occupancy, and bounds as JSON.
#[wasm_bindgen]
pub fn walk(m: u64, k: f64, rho: f64, steps: u32, seed: u64) -> Result<String, JsError> {
    let report = walk_impl(m, k, rho, steps, seed).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&report).expect("serializable"))
}

fn walk_impl(m: u64, k: f64, rho: f64, steps: u32, seed: u64) -> Result<WalkDemoReport, String> {
    let params = WalkParams::from_drop(m, k, rho).map_err(|e| e.to_string())?;
    let steps = (steps as u64).clamp(1_000, 4_000_000);
    let steady = steady_state(&params).map_err(|e| e.to_string())?;
    let stats = walk_occupancy(&params, steps, seed, 0.5).map_err(|e| e.to_string())?;
    let trajectory = {
        let traj = chainsim::randwalk::simulate_walk(&params, steps.min(50_000), seed)
            .map_err(|e| e.to_string())?;
        let stride = traj.len().div_ceil(MAX_PLOT_POINTS).max(1);
        traj.iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(i, &y)| (i as u64 + 1, y))
            .collect()
    };
    let occupancy: Vec<f64> = stats
        .histogram
        .iter()
        .map(|&c| c as f64 / stats.samples as f64)
        .collect();
    let stationary: Vec<f64> = (0..occupancy.len() as u64)
        .map(|y| if y < m { 0.0 } else { steady.occupancy(y - m) })
        .collect();
    Ok(WalkDemoReport {
        m,
        k,
        rho,
        beta: params.beta,
        x: steady.x,
        alpha_exact: steady.alpha,
        alpha_approx: steady.alpha_approx,
        expected_value_bound: expected_value_bound(&params).map_err(|e| e.to_string())?,
        tail_bound_05: tail_bound(&params, 0.05).map_err(|e| e.to_string())?,
        tail_bound_20: tail_bound(&params, 0.2).map_err(|e| e.to_string())?,
        mc_mean: stats.mean,
        mc_max: stats.max,
        stationary_mean: steady.mean(&params),
        trajectory,
        occupancy,
        stationary,
    })
}

#[derive(Serialize)]
struct DfsProfileReport {
    n: u32,
    p: f64,
    trials: u32,
    /// DFS long-path length (in nodes) per sampled graph.
    lengths: Vec<u32>,
    mean_length: f64,
}

/// Sample G(n, p) digraphs and report the DFS long-path length from vertex 0.
#[wasm_bindgen]
pub fn dfs_path_profile(n: u32, p: f64, trials: u32, seed: u64) -> Result<String, JsError> {
    let report = dfs_profile_impl(n, p, trials, seed).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&report).expect("serializable"))
}

fn dfs_profile_impl(n: u32, p: f64, trials: u32, seed: u64) -> Result<DfsProfileReport, String> {
    if !(p > 0.0 && p < 1.0) {
        return Err(format!("p = {p} outside (0, 1)"));
    }
    let n = n.clamp(2, 5_000);
    let trials = trials.clamp(1, 200);
    let mut rng = RngStream::new(seed);
    let mut lengths = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let g = gnp_digraph(n as usize, p, &mut rng);
        let path = dfs_longest_observed(&g, NodeId(0)).expect("start in graph");
        lengths.push(path.len() as u32);
    }
    let mean_length = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64;
    Ok(DfsProfileReport {
        n,
        p,
        trials,
        lengths,
        mean_length,
    })
}
