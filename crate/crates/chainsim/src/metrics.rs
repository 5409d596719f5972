//! Evaluation criteria computed from finished runs, plus scaling-law fits.
//!
//! The central identity: with q_tau defined as the number of nodes with
//! t <= tau < a_t (arrived, not yet serviced, half-open at the service step),
//! the queue sizes and waiting times have equal sums, exactly, on every
//! finalized run. `compute_summary` recomputes q from the per-node records
//! and refuses to produce a summary when the identity or the live queue
//! trace disagrees.

use crate::model::Sim;
use crate::policies::PolicyStats;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("summary requested on an unfinalized run")]
    Unfinalized,
    #[error("waiting/queue identity violated: sum w = {sum_wait}, sum q = {sum_queue}")]
    IdentityViolation { sum_wait: u64, sum_queue: u64 },
    #[error("recomputed queue {recomputed} != live queue {live} at step {tau}")]
    LiveTraceMismatch {
        tau: u64,
        live: u32,
        recomputed: u32,
    },
    #[error("need at least 3 points with distinct p, got {0}")]
    TooFewPoints(usize),
    #[error("delta {0} outside (0, 1)")]
    BadDelta(f64),
    #[error("no waiting-time data")]
    EmptyData,
    #[error("fit is degenerate (nonpositive coefficient)")]
    DegenerateFit,
}

/// Count / mean / extremes of a stat vector, for compact JSON reporting.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct VecSummary {
    pub count: u64,
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

impl VecSummary {
    pub fn of(values: &[u32]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        Self {
            count: values.len() as u64,
            mean: values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64,
            min: *values.iter().min().expect("non-empty"),
            max: *values.iter().max().expect("non-empty"),
        }
    }
}

/// Aggregate view of one finished replication.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub t_horizon: u64,
    pub arrivals: u64,
    pub served: u64,
    pub unserved: u64,
    pub sum_wait: u64,
    pub sum_queue: u64,
    /// (1/T) sum of waits == (1/T) sum of queue sizes.
    pub mean_wait: f64,
    /// Mean wait over nodes arriving after the first 20% of steps.
    pub mean_wait_burnin: f64,
    /// Mean wait over serviced nodes only (horizon censoring visible).
    pub mean_wait_served_only: f64,
    pub mean_queue: f64,
    /// Mean convention-queue over the last 80% of steps.
    pub mean_queue_burnin: f64,
    pub max_wait: u32,
    pub max_queue: u32,
    pub wait_p50: u32,
    pub wait_p90: u32,
    pub wait_p99: u32,
    pub phases: VecSummary,
    pub extensions: VecSummary,
    pub matchable_arrivals: u64,
    pub matched_on_arrival: u64,
    #[serde(skip)]
    pub waits: Vec<u32>,
    #[serde(skip)]
    pub queue_conv: Vec<u32>,
    #[serde(skip)]
    pub phase_lengths: Vec<u32>,
    #[serde(skip)]
    pub extension_lengths: Vec<u32>,
}

/// Compute the summary for a finalized run, asserting the identity and
/// cross-checking the convention queue against the live end-of-step queue
/// (they agree on every step except the horizon step, where the live queue
/// still holds the never-served nodes).
pub fn compute_summary(sim: &Sim, policy: &PolicyStats) -> Result<RunSummary, MetricsError> {
    if !sim.is_finalized() {
        return Err(MetricsError::Unfinalized);
    }
    let t_horizon = sim.clock();
    let t = t_horizon as usize;

    let mut waits: Vec<u32> = Vec::with_capacity(t);
    let mut delta = vec![0i64; t + 2];
    let mut sum_wait: u64 = 0;
    let mut served: u64 = 0;
    let mut unserved: u64 = 0;
    let burn_cut = t_horizon / 5;
    let mut burn_sum: u64 = 0;
    let mut burn_count: u64 = 0;
    let mut served_sum: u64 = 0;

    for rec in sim.records().iter().filter(|r| !r.donor) {
        let arrival = rec.arrival_time;
        let a = rec.service_time.expect("finalized run has all a_t set");
        let w = (a - arrival) as u32;
        waits.push(w);
        sum_wait += w as u64;
        if rec.chain.is_some() {
            served += 1;
            served_sum += w as u64;
        } else {
            unserved += 1;
        }
        if arrival > burn_cut {
            burn_sum += w as u64;
            burn_count += 1;
        }
        // q contribution on tau in [arrival, a)
        delta[arrival as usize] += 1;
        delta[a as usize] -= 1;
    }

    let mut queue_conv: Vec<u32> = Vec::with_capacity(t);
    let mut running: i64 = 0;
    let mut sum_queue: u64 = 0;
    for &d in &delta[1..=t] {
        running += d;
        debug_assert!(running >= 0);
        queue_conv.push(running as u32);
        sum_queue += running as u64;
    }

    if sum_wait != sum_queue {
        return Err(MetricsError::IdentityViolation {
            sum_wait,
            sum_queue,
        });
    }
    // Independent cross-check against the queue the simulation observed.
    let live = sim.queue_trace();
    if live.len() == t {
        for tau in 1..=t {
            let expected = if tau == t {
                live[tau - 1] - unserved as u32
            } else {
                live[tau - 1]
            };
            if queue_conv[tau - 1] != expected {
                return Err(MetricsError::LiveTraceMismatch {
                    tau: tau as u64,
                    live: live[tau - 1],
                    recomputed: queue_conv[tau - 1],
                });
            }
        }
    }

    let tf = t_horizon as f64;
    let mut sorted = waits.clone();
    sorted.sort_unstable();
    let burnin_queue: &[u32] = &queue_conv[burn_cut as usize..];
    let summary = RunSummary {
        t_horizon,
        arrivals: waits.len() as u64,
        served,
        unserved,
        sum_wait,
        sum_queue,
        mean_wait: sum_wait as f64 / tf,
        mean_wait_burnin: if burn_count > 0 {
            burn_sum as f64 / burn_count as f64
        } else {
            0.0
        },
        mean_wait_served_only: if served > 0 {
            served_sum as f64 / served as f64
        } else {
            0.0
        },
        mean_queue: sum_queue as f64 / tf,
        mean_queue_burnin: if burnin_queue.is_empty() {
            0.0
        } else {
            burnin_queue.iter().map(|&q| q as f64).sum::<f64>() / burnin_queue.len() as f64
        },
        max_wait: sorted.last().copied().unwrap_or(0),
        max_queue: queue_conv.iter().copied().max().unwrap_or(0),
        wait_p50: quantile_sorted(&sorted, 0.5),
        wait_p90: quantile_sorted(&sorted, 0.1),
        wait_p99: quantile_sorted(&sorted, 0.01),
        phases: VecSummary::of(&policy.phase_lengths),
        extensions: VecSummary::of(&policy.extension_lengths),
        matchable_arrivals: policy.matchable_arrivals,
        matched_on_arrival: policy.matched_on_arrival,
        waits,
        queue_conv,
        phase_lengths: policy.phase_lengths.clone(),
        extension_lengths: policy.extension_lengths.clone(),
    };
    Ok(summary)
}

fn quantile_sorted(sorted: &[u32], delta: f64) -> u32 {
    if sorted.is_empty() {
        return 0;
    }
    // Rank floor((1-delta) n), zero-based: the smallest recorded value
    // exceeded with frequency strictly below delta. The epsilon keeps exact
    // integer ranks from flooring one short (e.g. 0.1 * 20 = 1.999...96).
    let rank = ((1.0 - delta) * sorted.len() as f64 + 1e-9).floor() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

/// Empirical (1-delta)-quantile of the per-node waiting times: the smallest
/// recorded wait exceeded with frequency strictly below delta.
pub fn per_node_tail(waits: &[u32], delta: f64) -> Result<u32, MetricsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MetricsError::BadDelta(delta));
    }
    if waits.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    let mut sorted = waits.to_vec();
    sorted.sort_unstable();
    Ok(quantile_sorted(&sorted, delta))
}

impl RunSummary {
    pub fn tail(&self, delta: f64) -> Result<u32, MetricsError> {
        per_node_tail(&self.waits, delta)
    }
}

/// Mean remaining wait, beyond the probe step, of nodes still waiting then.
pub fn additional_wait_at(sim: &Sim, probe: u64) -> Option<f64> {
    let mut sum = 0u64;
    let mut count = 0u64;
    for rec in sim.records().iter().filter(|r| !r.donor) {
        let a = rec.service_time?;
        if rec.arrival_time <= probe && probe < a {
            sum += a - probe;
            count += 1;
        }
    }
    (count > 0).then(|| sum as f64 / count as f64)
}

/// Candidate scaling laws for mean waiting time as a function of p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    OneOverP,
    OneOverPLog,
}

impl ScalingModel {
    pub fn basis(&self, p: f64) -> f64 {
        match self {
            ScalingModel::OneOverP => 1.0 / p,
            ScalingModel::OneOverPLog => (1.0 / p) * (1.0 / p).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitResult {
    pub model: ScalingModel,
    pub coefficient: f64,
    /// max over points of |y - a g(p)| / (a g(p))
    pub residual_score: f64,
}

/// Least-squares fit of y = a * g(p) through the origin.
pub fn fit_scaling(points: &[(f64, f64)], model: ScalingModel) -> Result<FitResult, MetricsError> {
    let mut ps: Vec<u64> = points.iter().map(|&(p, _)| p.to_bits()).collect();
    ps.sort_unstable();
    ps.dedup();
    if ps.len() < 3 {
        return Err(MetricsError::TooFewPoints(ps.len()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(p, y) in points {
        let g = model.basis(p);
        num += y * g;
        den += g * g;
    }
    let a = num / den;
    if !a.is_finite() || a <= 0.0 {
        return Err(MetricsError::DegenerateFit);
    }
    let mut residual_score: f64 = 0.0;
    for &(p, y) in points {
        let fitted = a * model.basis(p);
        residual_score = residual_score.max((y - fitted).abs() / fitted);
    }
    Ok(FitResult {
        model,
        coefficient: a,
        residual_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChainId;
    use crate::oracle::{EdgeSource, ScriptedEdges};
    use crate::policies::{run_policy, PolicyConfig, RunConfig};

    fn empty_stats() -> PolicyStats {
        PolicyStats::default()
    }

    #[test]
    fn unfinalized_run_rejected() {
        let mut sim = Sim::new(EdgeSource::keyed(1, 0.1), 1);
        sim.arrive();
        sim.record_step();
        assert_eq!(
            compute_summary(&sim, &empty_stats()).unwrap_err(),
            MetricsError::Unfinalized
        );
    }

    #[test]
    fn no_match_run_sums() {
        // T=3, no matches: w = (2,1,0), sum = 3 = sum q.
        let mut sim = Sim::new(EdgeSource::keyed(1, 0.0), 1);
        for _ in 0..3 {
            sim.arrive();
            sim.record_step();
        }
        sim.finalize();
        let s = compute_summary(&sim, &empty_stats()).unwrap();
        assert_eq!(s.waits, vec![2, 1, 0]);
        assert_eq!(s.sum_wait, 3);
        assert_eq!(s.sum_queue, 3);
        assert_eq!(s.queue_conv, vec![1, 2, 0]);
        assert_eq!(s.mean_wait, 1.0);
    }

    #[test]
    fn matched_on_arrival_gives_zero_mean() {
        let mut sim = Sim::new(EdgeSource::keyed(1, 1.0), 1);
        for _ in 0..5 {
            let v = sim.arrive();
            sim.extend_chain(ChainId(0), &[v]).unwrap();
            sim.record_step();
        }
        sim.finalize();
        let s = compute_summary(&sim, &empty_stats()).unwrap();
        assert_eq!(s.mean_wait, 0.0);
        assert_eq!(s.unserved, 0);
    }

    #[test]
    fn identity_exact_on_seeded_greedy_runs() {
        for seed in [1u64, 2, 3, 99] {
            let run = run_policy(&RunConfig {
                policy: PolicyConfig::Greedy,
                p: 0.1,
                t_horizon: 2000,
                seed,
            })
            .unwrap();
            let s = compute_summary(&run.sim, &run.policy_stats).unwrap();
            assert_eq!(s.sum_wait, s.sum_queue);
        }
    }

    #[test]
    fn partial_service_identity() {
        // One node serviced late, others never: checks the horizon handling.
        let mut sim = Sim::new(EdgeSource::Scripted(ScriptedEdges::new([(0, 1)])), 1);
        for _ in 0..3 {
            sim.arrive();
            sim.record_step();
        }
        sim.arrive();
        // service node 1 within step 4 (before the step closes)
        sim.extend_chain(ChainId(0), &[crate::model::NodeId(1)])
            .unwrap();
        sim.record_step();
        sim.finalize();
        let s = compute_summary(&sim, &empty_stats()).unwrap();
        // node1 waited 3 (t=1..4), nodes 2,3,4 waited 2,1,0
        assert_eq!(s.sum_wait, 3 + 2 + 1);
        assert_eq!(s.sum_queue, s.sum_wait);
        assert_eq!(s.served, 1);
        assert_eq!(s.unserved, 3);
    }

    #[test]
    fn quantile_nearest_rank_examples() {
        let w: Vec<u32> = (0..10).collect();
        assert_eq!(per_node_tail(&w, 0.1).unwrap(), 9);
        let all_same = vec![7u32; 25];
        for delta in [0.01, 0.2, 0.5, 0.9] {
            assert_eq!(per_node_tail(&all_same, delta).unwrap(), 7);
        }
        assert_eq!(
            per_node_tail(&w, 1.5).unwrap_err(),
            MetricsError::BadDelta(1.5)
        );
        assert_eq!(
            per_node_tail(&[], 0.1).unwrap_err(),
            MetricsError::EmptyData
        );
    }

    #[test]
    fn quantile_monotone_in_delta() {
        let w: Vec<u32> = vec![4, 8, 15, 16, 23, 42, 0, 1, 9, 33, 12, 5];
        let mut last = u32::MAX;
        for delta in [0.05, 0.1, 0.25, 0.5, 0.75, 0.95] {
            let q = per_node_tail(&w, delta).unwrap();
            assert!(q <= last, "quantile must shrink as delta grows");
            last = q;
        }
    }

    #[test]
    fn fit_recovers_exact_synthetic_coefficients() {
        let ps = [0.02, 0.05, 0.1];
        let log_pts: Vec<(f64, f64)> = ps
            .iter()
            .map(|&p: &f64| (p, 5.0 * (1.0 / p) * (1.0 / p).ln()))
            .collect();
        let fit = fit_scaling(&log_pts, ScalingModel::OneOverPLog).unwrap();
        assert!((fit.coefficient - 5.0).abs() < 1e-12);
        assert!(fit.residual_score < 1e-12);

        let inv_pts: Vec<(f64, f64)> = ps.iter().map(|&p| (p, 7.0 / p)).collect();
        let fit = fit_scaling(&inv_pts, ScalingModel::OneOverP).unwrap();
        assert!((fit.coefficient - 7.0).abs() < 1e-12);
        assert!(fit.residual_score < 1e-12);
    }

    #[test]
    fn fit_needs_three_distinct_points() {
        let pts = [(0.1, 10.0), (0.1, 11.0), (0.1, 12.0)];
        assert_eq!(
            fit_scaling(&pts, ScalingModel::OneOverP).unwrap_err(),
            MetricsError::TooFewPoints(1)
        );
    }

    #[test]
    fn additional_wait_probe() {
        let mut sim = Sim::new(
            EdgeSource::Scripted(ScriptedEdges::new([(0, 1), (1, 2)])),
            1,
        );
        for _ in 0..4 {
            sim.arrive();
            sim.record_step();
        }
        sim.extend_chain(
            ChainId(0),
            &[crate::model::NodeId(1), crate::model::NodeId(2)],
        )
        .unwrap();
        sim.finalize();
        // probe at tau=2: nodes 1 and 2 still waiting (serviced at 4):
        // remaining 2 each. nodes 3,4 not arrived yet.
        assert_eq!(additional_wait_at(&sim, 2), Some(2.0));
    }
}
