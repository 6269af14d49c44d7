//! In-memory proximity graph construction (Vamana-style).
//!
//! The build makes two passes over a seeded random permutation of the nodes.
//! For each node it runs a bounded greedy search from the medoid, prunes the
//! visited set with the alpha rule, installs the pruned list, and adds
//! reverse edges (re-pruning any node that overflows the degree bound).
//! Pass 1 uses alpha = 1.0, pass 2 the configured alpha. The whole build is
//! single-threaded and deterministic for a given seed.

use crate::dataset::{NodeId, VectorDataset, VectorRef};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng64};

/// Build parameters.
#[derive(Clone, Copy, Debug)]
pub struct BuildParams {
    /// Maximum out-degree.
    pub r: usize,
    /// Build-time search list size.
    pub l_build: usize,
    /// Prune slack, >= 1.0.
    pub alpha: f64,
    pub seed: u64,
}

impl BuildParams {
    pub fn new(r: usize, l_build: usize, alpha: f64, seed: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::param("R must be >= 2"));
        }
        if l_build < r {
            return Err(Error::param("L_build must be >= R"));
        }
        if alpha < 1.0 {
            return Err(Error::param("alpha must be >= 1.0"));
        }
        Ok(BuildParams { r, l_build, alpha, seed })
    }
}

/// A bounded-degree proximity graph. Adjacency lists are sorted by exact
/// distance ascending, contain no self-loops and no duplicates.
pub struct InMemGraph {
    pub adjacency: Vec<Vec<NodeId>>,
    pub medoid: NodeId,
    pub max_degree: usize,
}

impl InMemGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Nodes reachable from the medoid by BFS.
    pub fn reachable_from_medoid(&self) -> usize {
        let n = self.adjacency.len();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[self.medoid as usize] = true;
        queue.push_back(self.medoid);
        let mut count = 1usize;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }
}

/// Id of the vector nearest the dataset centroid (ties to the lowest id).
/// For datasets above 100k vectors the centroid is estimated from a seeded
/// sample; the argmin scan always covers every vector.
pub fn compute_medoid(dataset: &VectorDataset) -> NodeId {
    const SAMPLE_CAP: usize = 100_000;
    const SAMPLE_SEED: u64 = 0x6D65_646F_6964; // fixed: op takes no seed

    let n = dataset.count();
    let dim = dataset.dim();
    let mut centroid = vec![0.0f64; dim];
    let mut widened = Vec::with_capacity(dim);

    let rows: Vec<usize> = if n <= SAMPLE_CAP {
        (0..n).collect()
    } else {
        Rng64::new(SAMPLE_SEED).sample_indices(n, SAMPLE_CAP)
    };
    for &i in &rows {
        dataset.row(i as NodeId).widen_into(&mut widened);
        for (acc, &x) in centroid.iter_mut().zip(&widened) {
            *acc += x as f64;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for c in centroid.iter_mut() {
        *c *= inv;
    }

    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for i in 0..n {
        dataset.row(i as NodeId).widen_into(&mut widened);
        let mut d = 0.0f64;
        for (&c, &x) in centroid.iter().zip(&widened) {
            let diff = c - x as f64;
            d += diff * diff;
        }
        if d < best_d {
            best_d = d;
            best = i as u32;
        }
    }
    best
}

/// Result of a bounded greedy search.
pub struct GreedyResult {
    /// Expanded nodes with their exact distances, in visit order.
    pub visited: Vec<(NodeId, f64)>,
    /// Final candidate list sorted by (distance, id) ascending.
    pub top: Vec<(NodeId, f64)>,
}

/// Standard best-first search from the medoid with a bounded candidate list.
/// Deterministic: ties break toward the lower node id.
pub fn greedy_search_mem(graph: &InMemGraph, dataset: &VectorDataset, q: VectorRef<'_>, l: usize) -> GreedyResult {
    let mut scratch = GreedyScratch::new(dataset.count());
    greedy_core(
        |u, out| out.extend_from_slice(&graph.adjacency[u as usize]),
        dataset,
        graph.medoid,
        q,
        l,
        &mut scratch,
    )
}

/// Reusable per-search state for the builder's inner loop.
struct GreedyScratch {
    stamp: Vec<u32>,
    generation: u32,
    nbr_buf: Vec<NodeId>,
}

impl GreedyScratch {
    fn new(n: usize) -> Self {
        GreedyScratch { stamp: vec![0; n], generation: 0, nbr_buf: Vec::new() }
    }

    fn next_gen(&mut self) -> u32 {
        self.generation += 1;
        if self.generation == u32::MAX {
            self.stamp.fill(0);
            self.generation = 1;
        }
        self.generation
    }
}

fn greedy_core<F>(
    mut neighbors: F,
    dataset: &VectorDataset,
    entry: NodeId,
    q: VectorRef<'_>,
    l: usize,
    scratch: &mut GreedyScratch,
) -> GreedyResult
where
    F: FnMut(NodeId, &mut Vec<NodeId>),
{
    debug_assert!(l >= 1);
    let generation = scratch.next_gen();

    // Sorted candidate list capped at l: (dist, id, visited).
    let mut list: Vec<(f64, u32, bool)> = Vec::with_capacity(l + 1);
    let d0 = dataset.dist2(entry, q).expect("entry matches dataset shape");
    list.push((d0, entry, false));
    scratch.stamp[entry as usize] = generation;

    let mut visited = Vec::new();
    loop {
        let Some(pos) = list.iter().position(|e| !e.2) else {
            break;
        };
        list[pos].2 = true;
        let (d_u, u) = (list[pos].0, list[pos].1);
        visited.push((u, d_u));

        let mut nbrs = std::mem::take(&mut scratch.nbr_buf);
        nbrs.clear();
        neighbors(u, &mut nbrs);
        for &v in &nbrs {
            if scratch.stamp[v as usize] == generation {
                continue;
            }
            scratch.stamp[v as usize] = generation;
            let d = dataset.dist2(v, q).expect("graph ids valid");
            if list.len() >= l {
                let worst = list[l - 1];
                if (d, v) >= (worst.0, worst.1) {
                    continue;
                }
            }
            let at = list.partition_point(|e| (e.0, e.1) < (d, v));
            list.insert(at, (d, v, false));
            if list.len() > l {
                list.pop();
            }
        }
        scratch.nbr_buf = nbrs;
    }

    GreedyResult {
        visited,
        top: list.into_iter().map(|(d, id, _)| (id, d)).collect(),
    }
}

/// Alpha pruning: repeatedly keep the closest remaining candidate `c` and
/// discard every remaining `c'` with `alpha * d(c, c') <= d(p, c')`. Stops at
/// `r` selections; output is sorted by distance to `p` ascending.
pub fn robust_prune(
    dataset: &VectorDataset,
    p: NodeId,
    cands: &[(NodeId, f64)],
    alpha: f64,
    r: usize,
) -> Vec<(NodeId, f64)> {
    let mut pool: Vec<(f64, u32)> = cands
        .iter()
        .filter(|(id, _)| *id != p)
        .map(|&(id, d)| (d, id))
        .collect();
    pool.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    pool.dedup_by_key(|e| e.1);
    // dedup_by_key only removes consecutive duplicates; ids can repeat with
    // equal distances only, so re-scan cheaply.
    let mut seen = std::collections::HashSet::with_capacity(pool.len());
    pool.retain(|e| seen.insert(e.1));

    let mut selected: Vec<(NodeId, f64)> = Vec::with_capacity(r);
    let mut alive = vec![true; pool.len()];
    for i in 0..pool.len() {
        if !alive[i] {
            continue;
        }
        let (d_pc, c) = pool[i];
        selected.push((c, d_pc));
        if selected.len() == r {
            break;
        }
        let c_row = dataset.row(c);
        for j in (i + 1)..pool.len() {
            if !alive[j] {
                continue;
            }
            let (d_pc2, c2) = pool[j];
            let d_cc2 = dataset.dist2(c2, c_row).expect("same dataset");
            if alpha * d_cc2 <= d_pc2 {
                alive[j] = false;
            }
        }
    }
    selected
}

/// Build the graph. See the module docs for the pass structure.
pub fn build_vamana(dataset: &VectorDataset, params: &BuildParams) -> Result<InMemGraph> {
    let n = dataset.count();
    if n < 2 {
        return Err(Error::param("build needs at least 2 vectors"));
    }
    let medoid = compute_medoid(dataset);

    let mut perm: Vec<u32> = (0..n as u32).collect();
    Rng64::new(derive_seed(params.seed, 0x7065726D)).shuffle(&mut perm);

    // Adjacency with cached exact distances, kept unsorted during the build.
    let mut adj: Vec<Vec<(f64, u32)>> = vec![Vec::new(); n];
    let mut scratch = GreedyScratch::new(n);
    let mut cand_buf: Vec<(NodeId, f64)> = Vec::new();

    for pass in 0..2 {
        let alpha = if pass == 0 { 1.0 } else { params.alpha };
        for &u in &perm {
            let res = greedy_core(
                |x, out| out.extend(adj[x as usize].iter().map(|e| e.1)),
                dataset,
                medoid,
                dataset.row(u),
                params.l_build,
                &mut scratch,
            );
            cand_buf.clear();
            cand_buf.extend(res.visited.iter().map(|&(id, d)| (id, d)));
            cand_buf.extend(adj[u as usize].iter().map(|&(d, id)| (id, d)));

            let pruned = robust_prune(dataset, u, &cand_buf, alpha, params.r);
            adj[u as usize] = pruned.iter().map(|&(id, d)| (d, id)).collect();

            for &(v, d_uv) in &pruned {
                let vl = &mut adj[v as usize];
                if vl.iter().any(|e| e.1 == u) {
                    continue;
                }
                vl.push((d_uv, u));
                if vl.len() > params.r {
                    let cands: Vec<(NodeId, f64)> = vl.iter().map(|&(d, id)| (id, d)).collect();
                    let kept = robust_prune(dataset, v, &cands, alpha, params.r);
                    adj[v as usize] = kept.iter().map(|&(id, d)| (d, id)).collect();
                }
            }
        }
    }

    // Finalize: sort by (distance, id), enforce the degree bound.
    let adjacency: Vec<Vec<NodeId>> = adj
        .into_iter()
        .map(|mut list| {
            list.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            list.truncate(params.r);
            list.into_iter().map(|(_, id)| id).collect()
        })
        .collect();

    Ok(InMemGraph { adjacency, medoid, max_degree: params.r })
}
