//! Online matching policies. Each policy sees the simulation right after an
//! arrival and may commit any number of chain extensions in that step.
//!
//! Conventions shared by all policies:
//! - greedy walks always take the longest-waiting (oldest) matching node;
//! - phase-based policies snapshot the waiting set at phase start ("old"
//!   nodes) and accumulate arrivals ("new" nodes) until their trigger fires;
//! - committed extensions are validated by the simulation itself, so a policy
//!   bug surfaces as an error, never as silent state corruption.

use crate::model::{ChainId, NodeId, Sim, SimError};
use crate::oracle::EdgeSource;
use crate::pathfind::{
    build_fair_path_graph, build_hybrid_path_graph, expand_labeled_path, hamiltonian_path_exact,
    DiGraph,
};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

const CHAIN0: ChainId = ChainId(0);
/// Exact Hamiltonian DP cutoff inside the CLEAR-ALL hot loop (the standalone
/// op dispatches exact up to 20; a 2^20 DP per arrival would dominate runs).
const CLEAR_ALL_DP_LIMIT: usize = 12;

/// Tie-break rule when several chain ends can take the arriving node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestIndex,
    Uniform,
}

/// Which policy to run, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PolicyConfig {
    Greedy,
    ClearAll {
        /// Heuristic restarts attempted per arrival once the cheap
        /// feasibility gates pass. Default max(4, ceil(log2 |Q|)).
        restarts_per_arrival: Option<u32>,
    },
    Batch {
        c: f64,
    },
    Nasp {
        c: f64,
        /// Run the path check every this many arrivals once a >= theta
        /// extension is arithmetically possible. Default ceil(theta/50).
        check_stride: Option<u32>,
    },
    GreedyBatch {
        c: f64,
    },
    MultiGreedy {
        donors: u32,
        tie_break: TieBreak,
    },
}

impl PolicyConfig {
    pub fn donors(&self) -> u32 {
        match self {
            PolicyConfig::MultiGreedy { donors, .. } => *donors,
            _ => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolicyConfig::Greedy => "greedy".into(),
            PolicyConfig::ClearAll { .. } => "clear_all".into(),
            PolicyConfig::Batch { c } => format!("batch_c{c}"),
            PolicyConfig::Nasp { c, .. } => format!("nasp_c{c}"),
            PolicyConfig::GreedyBatch { c } => format!("greedy_batch_c{c}"),
            PolicyConfig::MultiGreedy { donors, .. } => format!("multi_greedy_r{donors}"),
        }
    }
}

/// Per-run counters a policy accumulates alongside the event trace.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PolicyStats {
    /// Arrivals per completed phase (batch/NASP/greedy-batch phases,
    /// CLEAR-ALL inter-clear gaps).
    pub phase_lengths: Vec<u32>,
    /// Nodes committed per attempted phase extension (0 = empty extension).
    pub extension_lengths: Vec<u32>,
    /// Arrivals that had an in-edge from the current end when they arrived.
    pub matchable_arrivals: u64,
    /// Of those, how many were answered by a same-step nonempty commit.
    pub matched_on_arrival: u64,
}

pub trait PolicyStep {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError>;
    fn take_stats(&mut self) -> PolicyStats;
}

pub fn make_policy(config: &PolicyConfig, p: f64, rng: RngStream) -> Box<dyn PolicyStep> {
    match config {
        PolicyConfig::Greedy => Box::new(Greedy::default()),
        PolicyConfig::ClearAll {
            restarts_per_arrival,
        } => Box::new(ClearAll::new(*restarts_per_arrival, rng)),
        PolicyConfig::Batch { c } => Box::new(Batch::new(*c, p, rng)),
        PolicyConfig::Nasp { c, check_stride } => Box::new(Nasp::new(*c, p, *check_stride, rng)),
        PolicyConfig::GreedyBatch { c } => Box::new(GreedyBatch::new(*c, p, rng)),
        PolicyConfig::MultiGreedy { donors, tie_break } => {
            Box::new(MultiGreedy::new(*donors, *tie_break, rng))
        }
    }
}

fn phase_arrivals(c: f64, p: f64) -> u32 {
    (c / p).ceil() as u32
}

/// Walk greedily from the end of `chain`: repeatedly append the oldest
/// waiting out-neighbor of the current end until none exists.
pub(crate) fn greedy_walk(sim: &Sim, chain: ChainId) -> Vec<NodeId> {
    let mut seq: Vec<NodeId> = Vec::new();
    let mut taken: HashSet<NodeId> = HashSet::new();
    let mut cur = sim.chain(chain).end();
    loop {
        let next = sim
            .waiting()
            .find(|w| !taken.contains(w) && sim.edge(cur, *w));
        match next {
            Some(w) => {
                taken.insert(w);
                seq.push(w);
                cur = w;
            }
            None => break,
        }
    }
    seq
}

#[cfg(debug_assertions)]
fn debug_assert_end_exhausted(sim: &Sim, chain: ChainId) {
    let end = sim.chain(chain).end();
    if let Some(w) = sim.waiting().find(|&w| sim.edge(end, w)) {
        panic!("greedy post-state violated: end {end} still reaches waiting {w}");
    }
}

// ---------------------------------------------------------------------------
// Greedy
// ---------------------------------------------------------------------------

/// Extend at the first opportunity, oldest waiting node first, maximally.
#[derive(Default)]
pub struct Greedy {
    stats: PolicyStats,
}

impl PolicyStep for Greedy {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        let end = sim.chain(CHAIN0).end();
        // After every greedy run the end has no edge to any waiting node, so
        // only the newcomer can open a new opportunity.
        if sim.edge(end, arrived) {
            self.stats.matchable_arrivals += 1;
            let seq = greedy_walk(sim, CHAIN0);
            debug_assert!(!seq.is_empty());
            sim.extend_chain(CHAIN0, &seq)?;
            self.stats.matched_on_arrival += 1;
            self.stats.extension_lengths.push(seq.len() as u32);
        }
        #[cfg(debug_assertions)]
        debug_assert_end_exhausted(sim, CHAIN0);
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// CLEAR-ALL
// ---------------------------------------------------------------------------

/// Wait until one path can serve every waiting node, then clear the queue.
///
/// The policy keeps the waiting-set subgraph incrementally (adjacency and
/// degree counts) and only pays for a Hamiltonian search when the cheap
/// necessary conditions hold: at least one candidate start (out-neighbor of
/// the end), at most one zero-in-degree node and it must be a candidate, at
/// most one zero-out-degree node. A miss just retries next arrival.
pub struct ClearAll {
    rng: RngStream,
    restarts_override: Option<u32>,
    q: Vec<NodeId>,
    adj_out: HashMap<NodeId, Vec<NodeId>>,
    deg: HashMap<NodeId, (u32, u32)>, // (in, out) within Q
    in0: u32,
    out0: u32,
    candidates: HashSet<NodeId>,
    arrivals_since_clear: u32,
    stats: PolicyStats,
}

impl ClearAll {
    pub fn new(restarts_override: Option<u32>, rng: RngStream) -> Self {
        Self {
            rng,
            restarts_override,
            q: Vec::new(),
            adj_out: HashMap::new(),
            deg: HashMap::new(),
            in0: 0,
            out0: 0,
            candidates: HashSet::new(),
            arrivals_since_clear: 0,
            stats: PolicyStats::default(),
        }
    }

    fn bump_in(&mut self, v: NodeId) {
        let d = self.deg.get_mut(&v).expect("degree entry exists");
        if d.0 == 0 {
            self.in0 -= 1;
        }
        d.0 += 1;
    }

    fn bump_out(&mut self, v: NodeId) {
        let d = self.deg.get_mut(&v).expect("degree entry exists");
        if d.1 == 0 {
            self.out0 -= 1;
        }
        d.1 += 1;
    }

    fn gates_pass(&self) -> bool {
        if self.candidates.is_empty() || self.in0 > 1 || self.out0 > 1 {
            return false;
        }
        if self.in0 == 1 {
            // the unique zero-in-degree node must be able to start the path
            let v = self
                .q
                .iter()
                .find(|v| self.deg[v].0 == 0)
                .expect("in0 count says one exists");
            if !self.candidates.contains(v) {
                return false;
            }
        }
        true
    }

    fn reset_after_clear(&mut self) {
        self.q.clear();
        self.adj_out.clear();
        self.deg.clear();
        self.in0 = 0;
        self.out0 = 0;
        self.candidates.clear();
        self.arrivals_since_clear = 0;
    }
}

impl PolicyStep for ClearAll {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        self.arrivals_since_clear += 1;
        // fold the newcomer into the waiting-set subgraph
        self.deg.insert(arrived, (0, 0));
        self.in0 += 1;
        self.out0 += 1;
        self.adj_out.insert(arrived, Vec::new());
        let older = std::mem::take(&mut self.q);
        for &w in &older {
            if sim.edge(w, arrived) {
                self.adj_out.get_mut(&w).expect("row exists").push(arrived);
                self.bump_out(w);
                self.bump_in(arrived);
            }
            if sim.edge(arrived, w) {
                self.adj_out.get_mut(&arrived).expect("row exists").push(w);
                self.bump_out(arrived);
                self.bump_in(w);
            }
        }
        self.q = older;
        self.q.push(arrived);
        let end = sim.chain(CHAIN0).end();
        if sim.edge(end, arrived) {
            self.candidates.insert(arrived);
        }

        if !self.gates_pass() {
            return Ok(());
        }
        let graph = DiGraph::from_adjacency(&self.q, &self.adj_out);
        let candidates: Vec<NodeId> = {
            let mut c: Vec<NodeId> = self.candidates.iter().copied().collect();
            c.sort_unstable();
            c
        };
        let n = graph.len();
        let found = if n <= CLEAR_ALL_DP_LIMIT {
            hamiltonian_path_exact(&graph, &candidates).expect("within DP guard")
        } else {
            let restarts = self
                .restarts_override
                .unwrap_or_else(|| (usize::BITS - n.leading_zeros()).max(4))
                as usize;
            crate::pathfind::hamiltonian_path_heuristic(
                &graph,
                &candidates,
                restarts,
                &mut self.rng,
            )
        };
        if let Some(path) = found {
            sim.extend_chain(CHAIN0, &path)?;
            debug_assert_eq!(sim.waiting_len(), 0, "clear must empty the queue");
            self.stats.phase_lengths.push(self.arrivals_since_clear);
            self.stats.extension_lengths.push(path.len() as u32);
            self.reset_after_clear();
        }
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

/// Fixed-length phases of ceil(c/p) arrivals; at each phase close run the
/// labeled-contraction construction and commit whatever the DFS found.
pub struct Batch {
    rng: RngStream,
    theta_arrivals: u32,
    v_fp: Vec<NodeId>,
    q_snapshot: Vec<NodeId>,
    stats: PolicyStats,
}

impl Batch {
    pub fn new(c: f64, p: f64, rng: RngStream) -> Self {
        Self {
            rng,
            theta_arrivals: phase_arrivals(c, p),
            v_fp: Vec::new(),
            q_snapshot: Vec::new(),
            stats: PolicyStats::default(),
        }
    }
}

impl PolicyStep for Batch {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        self.v_fp.push(arrived);
        if (self.v_fp.len() as u32) < self.theta_arrivals {
            return Ok(());
        }
        let end = sim.chain(CHAIN0).end();
        let graph = build_fair_path_graph(
            &self.q_snapshot,
            &self.v_fp,
            end,
            sim.edge_source(),
            &mut self.rng,
        );
        let path = graph.dfs_from_end();
        let extension = expand_labeled_path(&graph, &path).expect("path starts at end");
        if !extension.is_empty() {
            sim.extend_chain(CHAIN0, &extension)?;
        }
        self.stats.extension_lengths.push(extension.len() as u32);
        self.stats.phase_lengths.push(self.theta_arrivals);
        self.q_snapshot = sim.waiting().collect();
        self.v_fp.clear();
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// NASP (not-a-short-path)
// ---------------------------------------------------------------------------

/// Commit only extensions of at least theta = ceil(c/p) nodes; the phase
/// length is whatever it takes to find one.
///
/// The search graph is the labeled contraction over (phase-start waiting set,
/// arrivals so far) augmented with the direct edges among the arrivals, all
/// maintained incrementally. A check can only succeed once 2|V_fp|-1 >= theta,
/// so checks are skipped below that and run every `check_stride` arrivals
/// after it.
pub struct Nasp {
    rng: RngStream,
    theta: u32,
    stride: u32,
    q_snapshot: Vec<NodeId>,
    in_of: Vec<Vec<u32>>,
    out_of: Vec<Vec<u32>>,
    v_fp: Vec<NodeId>,
    /// direct adjacency in graph-vertex indexing (0 = end, i+1 = v_fp[i])
    direct: Vec<Vec<u32>>,
    end_out: Vec<u32>,
    arrivals_this_phase: u32,
    checks_eligible: u32,
    stats: PolicyStats,
}

impl Nasp {
    pub fn new(c: f64, p: f64, check_stride: Option<u32>, rng: RngStream) -> Self {
        let theta = phase_arrivals(c, p);
        let stride = check_stride
            .unwrap_or_else(|| (theta as f64 / 50.0).ceil() as u32)
            .max(1);
        Self {
            rng,
            theta,
            stride,
            q_snapshot: Vec::new(),
            in_of: Vec::new(),
            out_of: Vec::new(),
            v_fp: Vec::new(),
            direct: vec![Vec::new()],
            end_out: Vec::new(),
            arrivals_this_phase: 0,
            checks_eligible: 0,
            stats: PolicyStats::default(),
        }
    }

    fn start_phase(&mut self, sim: &Sim) {
        self.q_snapshot = sim.waiting().collect();
        self.in_of = vec![Vec::new(); self.q_snapshot.len()];
        self.out_of = vec![Vec::new(); self.q_snapshot.len()];
        self.v_fp.clear();
        self.direct = vec![Vec::new()];
        self.end_out.clear();
        self.arrivals_this_phase = 0;
        self.checks_eligible = 0;
    }
}

impl PolicyStep for Nasp {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        self.arrivals_this_phase += 1;
        let vertex = self.v_fp.len() as u32 + 1;
        let mut own_row = Vec::new();
        for (j, &w) in self.v_fp.iter().enumerate() {
            if sim.edge(w, arrived) {
                self.direct[j + 1].push(vertex);
            }
            if sim.edge(arrived, w) {
                own_row.push(j as u32 + 1);
            }
        }
        self.direct.push(own_row);
        self.v_fp.push(arrived);
        for (i, &old) in self.q_snapshot.iter().enumerate() {
            if sim.edge(arrived, old) {
                self.in_of[i].push(vertex);
            }
            if sim.edge(old, arrived) {
                self.out_of[i].push(vertex);
            }
        }
        let end = sim.chain(CHAIN0).end();
        if sim.edge(end, arrived) {
            self.end_out.push(vertex);
        }

        // An extension uses at most |V_fp| new nodes and |V_fp|-1 labels.
        if 2 * self.v_fp.len() as u32 - 1 < self.theta {
            return Ok(());
        }
        self.checks_eligible += 1;
        if !(self.checks_eligible - 1).is_multiple_of(self.stride) {
            return Ok(());
        }

        let mut verts = Vec::with_capacity(self.v_fp.len() + 1);
        verts.push(end);
        verts.extend_from_slice(&self.v_fp);
        let graph = build_hybrid_path_graph(
            &self.q_snapshot,
            &self.in_of,
            &self.out_of,
            verts,
            self.direct.clone(),
            &self.end_out,
            &mut self.rng,
        );
        let path = graph.dfs_from_end();
        let extension = expand_labeled_path(&graph, &path).expect("path starts at end");
        if extension.len() as u32 >= self.theta {
            sim.extend_chain(CHAIN0, &extension)?;
            self.stats.phase_lengths.push(self.arrivals_this_phase);
            self.stats.extension_lengths.push(extension.len() as u32);
            self.start_phase(sim);
        }
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// Greedy-Batch
// ---------------------------------------------------------------------------

/// Batch phases, but any arrival with an in-edge from the current end is
/// served the same step: by a greedy run while the phase is young, by the
/// labeled construction once V_fp reached ceil(c/p).
pub struct GreedyBatch {
    rng: RngStream,
    theta: u32,
    v_fp: Vec<NodeId>,
    q_snapshot: Vec<NodeId>,
    arrivals_this_phase: u32,
    stats: PolicyStats,
}

impl GreedyBatch {
    pub fn new(c: f64, p: f64, rng: RngStream) -> Self {
        Self {
            rng,
            theta: phase_arrivals(c, p),
            v_fp: Vec::new(),
            q_snapshot: Vec::new(),
            arrivals_this_phase: 0,
            stats: PolicyStats::default(),
        }
    }
}

impl PolicyStep for GreedyBatch {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        self.arrivals_this_phase += 1;
        let end = sim.chain(CHAIN0).end();
        let matchable = sim.edge(end, arrived);
        let fill_before_arrival = self.v_fp.len() as u32;
        self.v_fp.push(arrived);
        if !matchable {
            return Ok(());
        }
        self.stats.matchable_arrivals += 1;
        if fill_before_arrival < self.theta {
            // young phase: plain greedy run
            let seq = greedy_walk(sim, CHAIN0);
            debug_assert!(!seq.is_empty());
            sim.extend_chain(CHAIN0, &seq)?;
            self.stats.matched_on_arrival += 1;
            let consumed: HashSet<NodeId> = seq.iter().copied().collect();
            self.v_fp.retain(|v| !consumed.contains(v));
            self.q_snapshot.retain(|v| !consumed.contains(v));
            #[cfg(debug_assertions)]
            debug_assert_end_exhausted(sim, CHAIN0);
        } else {
            // full phase: labeled construction; nonempty because the end
            // reaches the newcomer
            let graph = build_fair_path_graph(
                &self.q_snapshot,
                &self.v_fp,
                end,
                sim.edge_source(),
                &mut self.rng,
            );
            let path = graph.dfs_from_end();
            let extension = expand_labeled_path(&graph, &path).expect("path starts at end");
            debug_assert!(!extension.is_empty());
            sim.extend_chain(CHAIN0, &extension)?;
            self.stats.matched_on_arrival += 1;
            self.stats.extension_lengths.push(extension.len() as u32);
            self.stats.phase_lengths.push(self.arrivals_this_phase);
            self.q_snapshot = sim.waiting().collect();
            self.v_fp.clear();
            self.arrivals_this_phase = 0;
        }
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// Multi-donor greedy
// ---------------------------------------------------------------------------

/// R disjoint chains; the arriving node joins the first chain (by tie-break)
/// whose end reaches it, then that chain continues greedily.
pub struct MultiGreedy {
    donors: u32,
    tie_break: TieBreak,
    rng: RngStream,
    stats: PolicyStats,
}

impl MultiGreedy {
    pub fn new(donors: u32, tie_break: TieBreak, rng: RngStream) -> Self {
        assert!(donors >= 1);
        Self {
            donors,
            tie_break,
            rng,
            stats: PolicyStats::default(),
        }
    }
}

impl PolicyStep for MultiGreedy {
    fn on_arrival(&mut self, sim: &mut Sim, arrived: NodeId) -> Result<(), SimError> {
        let matching: Vec<ChainId> = (0..self.donors)
            .map(ChainId)
            .filter(|&c| sim.edge(sim.chain(c).end(), arrived))
            .collect();
        if matching.is_empty() {
            return Ok(());
        }
        self.stats.matchable_arrivals += 1;
        let chain = match self.tie_break {
            TieBreak::LowestIndex => matching[0],
            TieBreak::Uniform => matching[self.rng.gen_index(matching.len())],
        };
        let mut seq = vec![arrived];
        let mut cur = arrived;
        let mut taken: HashSet<NodeId> = HashSet::from([arrived]);
        loop {
            let next = sim
                .waiting()
                .find(|w| !taken.contains(w) && sim.edge(cur, *w));
            match next {
                Some(w) => {
                    taken.insert(w);
                    seq.push(w);
                    cur = w;
                }
                None => break,
            }
        }
        sim.extend_chain(chain, &seq)?;
        self.stats.matched_on_arrival += 1;
        self.stats.extension_lengths.push(seq.len() as u32);
        Ok(())
    }

    fn take_stats(&mut self) -> PolicyStats {
        std::mem::take(&mut self.stats)
    }
}

// ---------------------------------------------------------------------------
// Run driver
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy: PolicyConfig,
    pub p: f64,
    pub t_horizon: u64,
    pub seed: u64,
}

pub struct CompletedRun {
    pub sim: Sim,
    pub policy_stats: PolicyStats,
}

/// Run one policy for `t_horizon` steps and finalize.
pub fn run_policy(config: &RunConfig) -> Result<CompletedRun, SimError> {
    let mut sim = Sim::new(
        EdgeSource::keyed(config.seed, config.p),
        config.policy.donors(),
    );
    let mut policy = make_policy(
        &config.policy,
        config.p,
        RngStream::new(config.seed).fork(0x706F6C69637973), // distinct from oracle keys
    );
    for _ in 0..config.t_horizon {
        let arrived = sim.arrive();
        policy.on_arrival(&mut sim, arrived)?;
        sim.record_step();
    }
    sim.finalize();
    Ok(CompletedRun {
        policy_stats: policy.take_stats(),
        sim,
    })
}
