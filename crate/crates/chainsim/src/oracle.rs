//! Edge sampling for the online random graph.
//!
//! The arrival model puts a directed edge between every ordered pair of
//! distinct nodes independently with probability `p`. [`EdgeOracle`] realizes
//! this lazily but deterministically: `edge_exists(u, v)` is a pure function
//! of `(seed, u, v, p)`, keyed per ordered pair, so queries may happen in any
//! order (or never) without changing the sampled graph. This keeps memory flat
//! while making eager and lazy materialization bit-identical.

use crate::model::NodeId;
use crate::rng::mix64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("edge query on identical nodes (node {0})")]
    InvalidPair(NodeId),
}

/// Deterministic, seed-keyed sampler for the pairwise edge process.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeOracle {
    seed: u64,
    p: f64,
}

impl EdgeOracle {
    pub fn new(seed: u64, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "edge probability out of [0,1]");
        Self { seed, p }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Pure per-pair decision: does the directed edge `u -> v` exist?
    pub fn edge_exists(&self, u: NodeId, v: NodeId) -> Result<bool, OracleError> {
        if u == v {
            return Err(OracleError::InvalidPair(u));
        }
        Ok(self.edge_unchecked(u, v))
    }

    /// Hot-path variant; callers guarantee `u != v`.
    #[inline(always)]
    pub(crate) fn edge_unchecked(&self, u: NodeId, v: NodeId) -> bool {
        debug_assert_ne!(u, v);
        let h = pair_hash(self.seed, u.0 as u64, v.0 as u64);
        // Top 53 bits as a uniform in [0,1); strict `< p` makes p=0 always
        // false and p=1 always true.
        ((h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)) < self.p
    }
}

/// Keyed hash over an ordered pair: two chained avalanche rounds keep the
/// decision asymmetric in (u, v) and independent across pairs.
#[inline(always)]
fn pair_hash(seed: u64, u: u64, v: u64) -> u64 {
    let h = mix64(seed ^ u.wrapping_mul(0xA24BAED4963EE407));
    mix64(h ^ v.wrapping_mul(0x9FB21C651E98DF25))
}

/// Where a simulation gets its edges from.
///
/// `Keyed` is the production arrival model. `Scripted` pins an explicit edge
/// set for hand-built scenarios. `Prefilled` eagerly materializes the keyed
/// graph over a fixed node range up front; it exists to demonstrate that lazy
/// and eager sampling produce identical runs.
#[derive(Clone, Debug)]
pub enum EdgeSource {
    Keyed(EdgeOracle),
    Scripted(ScriptedEdges),
    Prefilled(PrefilledEdges),
}

impl EdgeSource {
    pub fn keyed(seed: u64, p: f64) -> Self {
        EdgeSource::Keyed(EdgeOracle::new(seed, p))
    }

    #[inline(always)]
    pub fn edge(&self, u: NodeId, v: NodeId) -> bool {
        debug_assert_ne!(u, v, "edge query on identical nodes");
        match self {
            EdgeSource::Keyed(o) => o.edge_unchecked(u, v),
            EdgeSource::Scripted(s) => s.edges.contains(&(u, v)),
            EdgeSource::Prefilled(m) => m.edge(u, v),
        }
    }

    /// Edge probability, where meaningful (1-ish placeholder for scripts).
    pub fn p(&self) -> f64 {
        match self {
            EdgeSource::Keyed(o) => o.p(),
            EdgeSource::Scripted(_) => f64::NAN,
            EdgeSource::Prefilled(m) => m.p,
        }
    }
}

/// Explicit edge list for tests and worked examples.
#[derive(Clone, Debug, Default)]
pub struct ScriptedEdges {
    edges: HashSet<(NodeId, NodeId)>,
}

impl ScriptedEdges {
    pub fn new<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        Self {
            edges: pairs
                .into_iter()
                .map(|(u, v)| (NodeId(u), NodeId(v)))
                .collect(),
        }
    }

    pub fn insert(&mut self, u: u32, v: u32) {
        self.edges.insert((NodeId(u), NodeId(v)));
    }
}

/// Eagerly sampled adjacency matrix over node ids `0..n`, filled from an
/// [`EdgeOracle`] in a fixed scan order. Agrees with the lazy oracle bit for
/// bit because each pair's decision is keyed, not drawn from a shared stream.
#[derive(Clone, Debug)]
pub struct PrefilledEdges {
    n: u32,
    p: f64,
    bits: Vec<u64>,
}

impl PrefilledEdges {
    pub fn materialize(oracle: &EdgeOracle, n: u32) -> Self {
        let total = n as usize * n as usize;
        let mut bits = vec![0u64; total.div_ceil(64)];
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                if oracle.edge_unchecked(NodeId(u), NodeId(v)) {
                    let idx = u as usize * n as usize + v as usize;
                    bits[idx / 64] |= 1 << (idx % 64);
                }
            }
        }
        Self {
            n,
            p: oracle.p(),
            bits,
        }
    }

    #[inline(always)]
    fn edge(&self, u: NodeId, v: NodeId) -> bool {
        assert!(u.0 < self.n && v.0 < self.n, "node outside prefilled range");
        let idx = u.0 as usize * self.n as usize + v.0 as usize;
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }
}
