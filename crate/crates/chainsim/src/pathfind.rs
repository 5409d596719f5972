//! Graph-search machinery: DFS long paths, the labeled contraction graph used
//! by the batch-style policies, Hamiltonian path search, and the subset-edge
//! property, plus brute-force oracles for testing.
//!
//! All searches visit out-neighbors oldest-arrival-first; randomness enters
//! only where the construction demands it (edge selection in the labeled
//! graph, restart order in the Hamiltonian heuristic).

use crate::model::NodeId;
use crate::oracle::EdgeSource;
use crate::rng::RngStream;
use std::collections::{BTreeMap, HashMap};

/// Exhaustive-search guard for the brute-force oracles.
pub const BRUTE_FORCE_LIMIT: usize = 16;
/// Above this many vertices Hamiltonian search falls back to the heuristic.
pub const HAMILTONIAN_DP_LIMIT: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PathError {
    #[error("start node {0} not in graph")]
    StartNotInGraph(NodeId),
    #[error("graph too large for exhaustive search: {n} > {limit}")]
    SizeGuard { n: usize, limit: usize },
    #[error("path does not start at the end vertex")]
    PathNotFromEnd,
}

/// Immutable digraph with out-neighbor lists sorted by arrival order.
#[derive(Clone, Debug)]
pub struct DiGraph {
    nodes: Vec<NodeId>,
    adj: Vec<Vec<u32>>,
}

impl DiGraph {
    /// Materialize the subgraph induced by `nodes` from an edge source.
    pub fn from_edge_source(nodes: &[NodeId], edges: &EdgeSource) -> Self {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let n = sorted.len();
        let mut adj = vec![Vec::new(); n];
        for (i, &u) in sorted.iter().enumerate() {
            for (j, &v) in sorted.iter().enumerate() {
                if i != j && edges.edge(u, v) {
                    adj[i].push(j as u32);
                }
            }
        }
        Self { nodes: sorted, adj }
    }

    /// Graph over ids `0..n` with explicit index edges (self-loops dropped).
    pub fn from_index_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let nodes = (0..n as u32).map(NodeId).collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adj[u as usize].push(v);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { nodes, adj }
    }

    /// Graph from per-node out-neighbor lists keyed by id.
    pub fn from_adjacency(nodes: &[NodeId], out: &HashMap<NodeId, Vec<NodeId>>) -> Self {
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let index: HashMap<NodeId, u32> = sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let mut adj = vec![Vec::new(); sorted.len()];
        for (&u, targets) in out {
            if let Some(&ui) = index.get(&u) {
                for t in targets {
                    if let Some(&ti) = index.get(t) {
                        adj[ui as usize].push(ti);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { nodes: sorted, adj }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: u32) -> NodeId {
        self.nodes[idx as usize]
    }

    pub fn index_of(&self, v: NodeId) -> Option<u32> {
        self.nodes.binary_search(&v).ok().map(|i| i as u32)
    }

    pub fn out(&self, idx: u32) -> &[u32] {
        &self.adj[idx as usize]
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Debug export: one `u v` pair per line.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        for (i, list) in self.adj.iter().enumerate() {
            for &j in list {
                out.push_str(&format!(
                    "{} {}\n",
                    self.nodes[i].0, self.nodes[j as usize].0
                ));
            }
        }
        out
    }

    fn to_ids(&self, path: &[u32]) -> Vec<NodeId> {
        path.iter().map(|&i| self.nodes[i as usize]).collect()
    }
}

/// Deepest root-to-current stack snapshot observed during one DFS.
///
/// The cursor always takes the first unvisited out-neighbor in list order, so
/// with arrival-sorted adjacency the traversal is oldest-first and fully
/// deterministic. Linear in vertices + edges.
pub(crate) fn dfs_deepest_stack(adj: &[Vec<u32>], start: u32) -> Vec<u32> {
    let mut visited = vec![false; adj.len()];
    visited[start as usize] = true;
    // (vertex, cursor into its adjacency list)
    let mut stack: Vec<(u32, usize)> = vec![(start, 0)];
    let mut best: Vec<u32> = vec![start];
    while let Some(&(v, cursor)) = stack.last() {
        let list = &adj[v as usize];
        let mut c = cursor;
        let mut next = None;
        while c < list.len() {
            let w = list[c];
            c += 1;
            if !visited[w as usize] {
                next = Some(w);
                break;
            }
        }
        stack.last_mut().expect("stack non-empty here").1 = c;
        match next {
            Some(w) => {
                visited[w as usize] = true;
                stack.push((w, 0));
                if stack.len() > best.len() {
                    best = stack.iter().map(|&(x, _)| x).collect();
                }
            }
            None => {
                stack.pop();
            }
        }
    }
    best
}

/// DFS-LP: run a single DFS from `start` and return the longest simple path
/// it observed (the deepest stack configuration).
pub fn dfs_longest_observed(graph: &DiGraph, start: NodeId) -> Result<Vec<NodeId>, PathError> {
    let s = graph
        .index_of(start)
        .ok_or(PathError::StartNotInGraph(start))?;
    Ok(graph.to_ids(&dfs_deepest_stack(&graph.adj, s)))
}

/// Exact longest simple path from `start` by exhaustive backtracking.
/// Test oracle only; guarded to tiny graphs.
pub fn longest_path_bruteforce(graph: &DiGraph, start: NodeId) -> Result<Vec<NodeId>, PathError> {
    let n = graph.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(PathError::SizeGuard {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let s = graph
        .index_of(start)
        .ok_or(PathError::StartNotInGraph(start))?;

    fn explore(adj: &[Vec<u32>], v: u32, visited: u32, path: &mut Vec<u32>, best: &mut Vec<u32>) {
        if path.len() > best.len() {
            *best = path.clone();
        }
        for &w in &adj[v as usize] {
            if visited & (1 << w) == 0 {
                path.push(w);
                explore(adj, w, visited | (1 << w), path, best);
                path.pop();
            }
        }
    }

    let mut path = vec![s];
    let mut best = vec![s];
    explore(&graph.adj, s, 1 << s, &mut path, &mut best);
    Ok(graph.to_ids(&best))
}

// ---------------------------------------------------------------------------
// Labeled contraction graph
// ---------------------------------------------------------------------------

/// Contraction graph over the new arrivals plus the chain end.
///
/// Vertex 0 is the chain end; the rest are the new arrivals. A labeled edge
/// `u1 -> u2` stands for the two-hop route `u1 -> v -> u2` through the old
/// waiting node `v` that labels it; unlabeled edges are direct.
#[derive(Clone, Debug)]
pub struct LabeledDiGraph {
    verts: Vec<NodeId>,
    adj: Vec<Vec<u32>>,
    labels: HashMap<(u32, u32), NodeId>,
    empty_extension: bool,
}

impl LabeledDiGraph {
    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vert(&self, idx: u32) -> NodeId {
        self.verts[idx as usize]
    }

    pub fn label(&self, a: u32, b: u32) -> Option<NodeId> {
        self.labels.get(&(a, b)).copied()
    }

    pub fn labeled_edge_count(&self) -> usize {
        self.labels.len()
    }

    /// True when the chain end had no out-edge into the new arrivals, i.e.
    /// the construction can only return an empty extension.
    pub fn is_empty_extension(&self) -> bool {
        self.empty_extension
    }

    /// Deepest DFS stack from the chain end (vertex 0), as internal indices.
    pub fn dfs_from_end(&self) -> Vec<u32> {
        if self.verts.is_empty() {
            return Vec::new();
        }
        dfs_deepest_stack(&self.adj, 0)
    }
}

/// Shared assembly: choose one label per parallel bundle, merge in direct
/// edges (labeled edges win ties so the old node still gets served), sort
/// adjacency oldest-first.
pub(crate) fn assemble_labeled_graph(
    verts: Vec<NodeId>,
    label_candidates: Vec<(u32, u32, NodeId)>,
    direct_adj: Option<Vec<Vec<u32>>>,
    end_out: &[u32],
    rng: &mut RngStream,
) -> LabeledDiGraph {
    let n = verts.len();
    let mut bundles: BTreeMap<(u32, u32), Vec<NodeId>> = BTreeMap::new();
    for (a, b, v) in label_candidates {
        bundles.entry((a, b)).or_default().push(v);
    }
    let mut labels = HashMap::with_capacity(bundles.len());
    let mut adj = match direct_adj {
        Some(mut d) => {
            d.resize(n, Vec::new());
            d
        }
        None => vec![Vec::new(); n],
    };
    for (&(a, b), options) in &bundles {
        let v = if options.len() == 1 {
            options[0]
        } else {
            options[rng.gen_index(options.len())]
        };
        labels.insert((a, b), v);
        adj[a as usize].push(b);
    }
    adj[0].extend_from_slice(end_out);
    let empty_extension = adj[0].is_empty();
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    LabeledDiGraph {
        verts,
        adj,
        labels,
        empty_extension,
    }
}

/// Build the contraction graph over `(waiting, new_arrivals, end)`.
///
/// For each old node v with a non-empty in-set and out-set inside the new
/// arrivals, pick one random in-neighbor u1 and one random out-neighbor u2
/// (u2 != u1: reusing the same new node cannot form a path) and add the edge
/// u1 -> u2 labeled v. Parallel edges keep one uniformly random survivor. The
/// end vertex contributes its direct out-edges into the arrivals; if it has
/// none the graph is flagged as an empty extension.
pub fn build_fair_path_graph(
    waiting: &[NodeId],
    new_arrivals: &[NodeId],
    end: NodeId,
    edges: &EdgeSource,
    rng: &mut RngStream,
) -> LabeledDiGraph {
    debug_assert!(!new_arrivals.contains(&end));
    let mut verts = Vec::with_capacity(new_arrivals.len() + 1);
    verts.push(end);
    verts.extend_from_slice(new_arrivals);

    let mut label_candidates = Vec::new();
    let mut incoming = Vec::new();
    let mut outgoing = Vec::new();
    for &v in waiting {
        incoming.clear();
        outgoing.clear();
        for (i, &u) in new_arrivals.iter().enumerate() {
            if edges.edge(u, v) {
                incoming.push(i as u32 + 1);
            }
            if edges.edge(v, u) {
                outgoing.push(i as u32 + 1);
            }
        }
        if let Some((u1, u2)) = pick_label_pair(&incoming, &outgoing, rng) {
            label_candidates.push((u1, u2, v));
        }
    }
    let end_out: Vec<u32> = new_arrivals
        .iter()
        .enumerate()
        .filter(|&(_, &u)| edges.edge(end, u))
        .map(|(i, _)| i as u32 + 1)
        .collect();
    assemble_labeled_graph(verts, label_candidates, None, &end_out, rng)
}

/// Uniform u1 from `incoming`, uniform u2 from `outgoing` minus u1.
pub(crate) fn pick_label_pair(
    incoming: &[u32],
    outgoing: &[u32],
    rng: &mut RngStream,
) -> Option<(u32, u32)> {
    if incoming.is_empty() || outgoing.is_empty() {
        return None;
    }
    let u1 = incoming[rng.gen_index(incoming.len())];
    let valid = outgoing.iter().filter(|&&u| u != u1).count();
    if valid == 0 {
        return None;
    }
    let mut k = rng.gen_index(valid);
    for &u2 in outgoing {
        if u2 == u1 {
            continue;
        }
        if k == 0 {
            return Some((u1, u2));
        }
        k -= 1;
    }
    unreachable!()
}

/// NASP-style variant: the labeled construction plus the direct edges among
/// the new arrivals, from incrementally maintained neighbor lists.
/// `in_of`/`out_of` hold, per old node, the arrival indices (1-based vertex
/// indices) with an edge to / from it; `direct_adj` is over the same indices.
pub fn build_hybrid_path_graph(
    old_nodes: &[NodeId],
    in_of: &[Vec<u32>],
    out_of: &[Vec<u32>],
    verts: Vec<NodeId>,
    direct_adj: Vec<Vec<u32>>,
    end_out: &[u32],
    rng: &mut RngStream,
) -> LabeledDiGraph {
    debug_assert_eq!(old_nodes.len(), in_of.len());
    debug_assert_eq!(old_nodes.len(), out_of.len());
    let mut label_candidates = Vec::new();
    for (i, &v) in old_nodes.iter().enumerate() {
        if let Some((u1, u2)) = pick_label_pair(&in_of[i], &out_of[i], rng) {
            label_candidates.push((u1, u2, v));
        }
    }
    assemble_labeled_graph(verts, label_candidates, Some(direct_adj), end_out, rng)
}

/// Expand a contraction-graph path (starting at the end vertex) into the node
/// sequence it stands for: each labeled edge contributes its label followed
/// by its target, each direct edge just its target. A path of l edges that is
/// all labeled (past the first) expands to 2l-1 nodes.
pub fn expand_labeled_path(graph: &LabeledDiGraph, path: &[u32]) -> Result<Vec<NodeId>, PathError> {
    if path.first() != Some(&0) {
        return Err(PathError::PathNotFromEnd);
    }
    let mut out = Vec::with_capacity(path.len() * 2);
    for pair in path.windows(2) {
        if let Some(label) = graph.label(pair[0], pair[1]) {
            out.push(label);
        }
        out.push(graph.vert(pair[1]));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hamiltonian path search
// ---------------------------------------------------------------------------

/// Restart budget for the Hamiltonian heuristic.
pub fn default_hamiltonian_budget(n: usize) -> usize {
    n * (usize::BITS - n.leading_zeros()) as usize
}

/// Find a path visiting every vertex exactly once, starting at one of the
/// candidate vertices. Exact (Held-Karp) up to [`HAMILTONIAN_DP_LIMIT`]
/// vertices, randomized rotation heuristic above. `None` is sound (a
/// returned path is always verified) but incomplete above the DP limit.
pub fn find_hamiltonian_path(
    graph: &DiGraph,
    start_candidates: &[NodeId],
    budget: Option<usize>,
    rng: &mut RngStream,
) -> Option<Vec<NodeId>> {
    let n = graph.len();
    if n == 0 || start_candidates.is_empty() {
        return None;
    }
    let starts: Vec<u32> = start_candidates
        .iter()
        .filter_map(|&v| graph.index_of(v))
        .collect();
    if starts.is_empty() {
        return None;
    }
    let found = if n <= HAMILTONIAN_DP_LIMIT {
        hamiltonian_exact_indices(graph, &starts)
    } else {
        let restarts = budget.unwrap_or_else(|| default_hamiltonian_budget(n));
        hamiltonian_heuristic_indices(graph, &starts, restarts, rng)
    };
    found.map(|p| graph.to_ids(&p))
}

/// Exact Hamiltonian path existence/reconstruction; errors above the limit.
pub fn hamiltonian_path_exact(
    graph: &DiGraph,
    start_candidates: &[NodeId],
) -> Result<Option<Vec<NodeId>>, PathError> {
    let n = graph.len();
    if n > HAMILTONIAN_DP_LIMIT {
        return Err(PathError::SizeGuard {
            n,
            limit: HAMILTONIAN_DP_LIMIT,
        });
    }
    let starts: Vec<u32> = start_candidates
        .iter()
        .filter_map(|&v| graph.index_of(v))
        .collect();
    if n == 0 || starts.is_empty() {
        return Ok(None);
    }
    Ok(hamiltonian_exact_indices(graph, &starts).map(|p| graph.to_ids(&p)))
}

/// Heuristic only, any size; restart count is explicit.
pub fn hamiltonian_path_heuristic(
    graph: &DiGraph,
    start_candidates: &[NodeId],
    restarts: usize,
    rng: &mut RngStream,
) -> Option<Vec<NodeId>> {
    let starts: Vec<u32> = start_candidates
        .iter()
        .filter_map(|&v| graph.index_of(v))
        .collect();
    if graph.is_empty() || starts.is_empty() {
        return None;
    }
    hamiltonian_heuristic_indices(graph, &starts, restarts, rng).map(|p| graph.to_ids(&p))
}

/// Held-Karp over subsets: dp[mask] = bitset of vertices that can end a
/// simple path covering exactly `mask` and starting at a candidate.
fn hamiltonian_exact_indices(graph: &DiGraph, starts: &[u32]) -> Option<Vec<u32>> {
    let n = graph.len();
    debug_assert!(n <= HAMILTONIAN_DP_LIMIT);
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let out_mask: Vec<u32> = (0..n as u32)
        .map(|v| graph.out(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect();
    let in_mask: Vec<u32> = {
        let mut m = vec![0u32; n];
        for v in 0..n as u32 {
            for &w in graph.out(v) {
                m[w as usize] |= 1 << v;
            }
        }
        m
    };
    let mut dp = vec![0u32; 1 << n];
    for &s in starts {
        dp[1usize << s] |= 1 << s;
    }
    for mask in 1usize..(1 << n) {
        let mut ends = dp[mask];
        if ends == 0 {
            continue;
        }
        while ends != 0 {
            let v = ends.trailing_zeros();
            ends &= ends - 1;
            let mut ext = out_mask[v as usize] & !(mask as u32);
            while ext != 0 {
                let w = ext.trailing_zeros();
                ext &= ext - 1;
                dp[mask | (1 << w)] |= 1 << w;
            }
        }
    }
    if dp[full as usize] == 0 {
        return None;
    }
    // Walk backwards from any end of the full cover.
    let mut mask = full;
    let mut v = dp[full as usize].trailing_zeros();
    let mut rev = vec![v];
    while mask.count_ones() > 1 {
        let prev_mask = mask & !(1 << v);
        let preds = dp[prev_mask as usize] & in_mask[v as usize];
        debug_assert_ne!(preds, 0);
        v = preds.trailing_zeros();
        rev.push(v);
        mask = prev_mask;
    }
    rev.reverse();
    Some(rev)
}

/// Randomized restart search with directed rotation moves.
///
/// Each restart grows a path from a random candidate by random unvisited
/// out-neighbors. When the tail is stuck, an edge tail -> v_i closes a cycle
/// over v_i..tail; if the cycle can be re-entered from v_{i-1} through some
/// edge v_{i-1} -> v_s, the path is rewired to
///
/// ```text
/// v_0 .. v_{i-1}, v_s .. tail, v_i .. v_{s-1}
/// ```
///
/// which covers the same vertices, keeps the head pinned at the start
/// candidate, and exposes the fresh tail v_{s-1}.
fn hamiltonian_heuristic_indices(
    graph: &DiGraph,
    starts: &[u32],
    restarts: usize,
    rng: &mut RngStream,
) -> Option<Vec<u32>> {
    let n = graph.len();
    const NOT_ON_PATH: u32 = u32::MAX;
    let mut pos = vec![NOT_ON_PATH; n];
    let mut path: Vec<u32> = Vec::with_capacity(n);
    let mut fresh: Vec<u32> = Vec::new();
    let mut pivots: Vec<u32> = Vec::new();

    for _ in 0..restarts.max(1) {
        for &v in &path {
            pos[v as usize] = NOT_ON_PATH;
        }
        path.clear();
        let start = starts[rng.gen_index(starts.len())];
        path.push(start);
        pos[start as usize] = 0;
        let mut moves = 4 * n + 16;

        'grow: loop {
            let tail = *path.last().expect("path never empty");
            fresh.clear();
            fresh.extend(
                graph
                    .out(tail)
                    .iter()
                    .copied()
                    .filter(|&w| pos[w as usize] == NOT_ON_PATH),
            );
            if !fresh.is_empty() {
                let w = fresh[rng.gen_index(fresh.len())];
                pos[w as usize] = path.len() as u32;
                path.push(w);
                continue;
            }
            if path.len() == n {
                return Some(path.clone());
            }
            if moves == 0 {
                break;
            }
            // Rotation: pick a random usable (i, s) pair.
            pivots.clear();
            pivots.extend(
                graph
                    .out(tail)
                    .iter()
                    .copied()
                    .filter(|&w| pos[w as usize] >= 1 && pos[w as usize] != NOT_ON_PATH)
                    .map(|w| pos[w as usize]),
            );
            rng.shuffle(&mut pivots);
            let m = path.len() - 1;
            for &i in &pivots {
                let i = i as usize;
                let prev = path[i - 1];
                fresh.clear();
                fresh.extend(
                    graph
                        .out(prev)
                        .iter()
                        .copied()
                        .filter(|&w| {
                            let s = pos[w as usize];
                            s != NOT_ON_PATH && s > i as u32 && s <= m as u32
                        })
                        .map(|w| pos[w as usize]),
                );
                if fresh.is_empty() {
                    continue;
                }
                let s = fresh[rng.gen_index(fresh.len())] as usize;
                let mut rewired = Vec::with_capacity(path.len());
                rewired.extend_from_slice(&path[..i]);
                rewired.extend_from_slice(&path[s..]);
                rewired.extend_from_slice(&path[i..s]);
                for (idx, &v) in rewired.iter().enumerate().skip(i) {
                    pos[v as usize] = idx as u32;
                }
                path = rewired;
                moves -= 1;
                continue 'grow;
            }
            break; // no rotation available: restart
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Subset-edge property
// ---------------------------------------------------------------------------

/// Which directions count as an edge "joining" two disjoint subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinMode {
    /// An edge in either direction joins the pair.
    EitherDirection,
    /// Every ordered pair (S1, S2) must have an edge from S1 into S2.
    Directed,
}

/// True iff every pair of disjoint size-k vertex subsets is joined by an
/// edge under `mode`. Exhaustive; guarded to tiny graphs.
pub fn check_subset_edge_property(
    graph: &DiGraph,
    k: usize,
    mode: JoinMode,
) -> Result<bool, PathError> {
    let n = graph.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(PathError::SizeGuard {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if k == 0 || 2 * k > n {
        return Ok(true);
    }
    let out_mask: Vec<u32> = (0..n as u32)
        .map(|v| graph.out(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect();
    let reaches = |s1: u32, s2: u32| -> bool {
        let mut rest = s1;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            if out_mask[v as usize] & s2 != 0 {
                return true;
            }
        }
        false
    };

    // Gosper's hack over size-k masks of S1, then of S2 within the complement.
    let full: u32 = (1u32 << n) - 1;
    let mut s1 = (1u32 << k) - 1;
    loop {
        let complement = full & !s1;
        if complement.count_ones() as usize >= k {
            for s2 in submasks_of_size(complement, k) {
                let joined = match mode {
                    JoinMode::EitherDirection => reaches(s1, s2) || reaches(s2, s1),
                    JoinMode::Directed => reaches(s1, s2),
                };
                if !joined {
                    return Ok(false);
                }
            }
        }
        // next size-k mask within 0..n
        let c = s1 & s1.wrapping_neg();
        let r = s1 + c;
        if r > full {
            break;
        }
        s1 = (((r ^ s1) >> 2) / c) | r;
        if s1 > full {
            break;
        }
    }
    Ok(true)
}

/// All size-k submasks of `mask`, smallest first.
fn submasks_of_size(mask: u32, k: usize) -> Vec<u32> {
    let bits: Vec<u32> = (0..32).filter(|&b| mask >> b & 1 == 1).collect();
    let mut out = Vec::new();
    let m = bits.len();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0u32, |acc, &i| acc | 1 << bits[i]));
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Sample a G(n, p) digraph over ids 0..n by geometric skip-sampling across
/// the n*(n-1) ordered slots (linear in the number of edges).
pub fn gnp_digraph(n: usize, p: f64, rng: &mut RngStream) -> DiGraph {
    assert!((0.0..=1.0).contains(&p));
    let nodes: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    let mut adj = vec![Vec::new(); n];
    if p > 0.0 && n > 1 {
        let total = n * (n - 1);
        if p >= 1.0 {
            for (i, list) in adj.iter_mut().enumerate() {
                list.extend((0..n as u32).filter(|&j| j != i as u32));
            }
            return DiGraph { nodes, adj };
        }
        let ln_q = (1.0 - p).ln();
        let mut slot = 0usize;
        loop {
            let u = rng.next_f64().max(f64::MIN_POSITIVE);
            let skip = (u.ln() / ln_q) as usize;
            slot = match slot.checked_add(skip) {
                Some(s) => s,
                None => break,
            };
            if slot >= total {
                break;
            }
            let i = slot / (n - 1);
            let mut j = slot % (n - 1);
            if j >= i {
                j += 1;
            }
            adj[i].push(j as u32);
            slot += 1;
        }
        for list in &mut adj {
            list.sort_unstable();
        }
    }
    DiGraph { nodes, adj }
}

/// Verify a claimed Hamiltonian path: covers every vertex once, consecutive
/// edges exist, head is one of the candidates.
pub fn is_valid_hamiltonian(graph: &DiGraph, path: &[NodeId], candidates: &[NodeId]) -> bool {
    if path.len() != graph.len() || graph.is_empty() {
        return false;
    }
    if !candidates.contains(&path[0]) {
        return false;
    }
    let mut seen = vec![false; graph.len()];
    let mut prev: Option<u32> = None;
    for &v in path {
        let Some(i) = graph.index_of(v) else {
            return false;
        };
        if seen[i as usize] {
            return false;
        }
        seen[i as usize] = true;
        if let Some(p) = prev {
            if !graph.has_edge(p, i) {
                return false;
            }
        }
        prev = Some(i);
    }
    true
}
