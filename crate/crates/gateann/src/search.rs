//! The five search engines over a disk index.
//!
//! All engines share one traversal skeleton: a sorted candidate frontier of
//! at most `L` entries ordered by PQ distance, a pipeline of at most `W`
//! outstanding storage reads, and a result accumulator of exact distances
//! computed from fetched full-precision vectors. They differ only in where
//! the predicate is applied:
//!
//! * `beam-post` - synchronous rounds: read the best `W` candidates, wait
//!   for the whole batch, post-filter results at the end.
//! * `pipe-post` - same node processing, but completions are processed as
//!   they arrive while the pipeline stays full.
//! * `naive-pre` - candidates failing the predicate are dropped without
//!   neighbor expansion (the recall-collapsing strawman).
//! * `early-filter` - every candidate is still read; failing nodes skip the
//!   exact distance computation but are expanded normally.
//! * `gated` - the predicate is checked before any I/O. Passing candidates
//!   take the normal read path; failing candidates are tunneled: their
//!   stored neighbors come from the in-memory neighbor store, get PQ
//!   distances, and join the frontier if they beat the frontier threshold.
//!   The failing node itself is marked visited and filter-failing, and is
//!   never read and never eligible as a result.
//!
//! Results in every mode contain only predicate-satisfying nodes whose exact
//! distance was computed from the full-precision vector, sorted ascending
//! with ties broken by node id.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::dataset::{NodeId, Vector, VectorRef};
use crate::error::{Error, Result};
use crate::filter::Predicate;
use crate::pq::{self, PqCodebook, PqCodes, QueryLut};
use crate::stores::{FilterStore, NeighborStore};
use crate::storage::{Backend, BackendKind, IndexImage, Session};

/// Engine selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    BeamPost,
    PipePost,
    NaivePre,
    EarlyFilter,
    Gated,
}

impl SearchMode {
    pub const ALL: [SearchMode; 5] = [
        SearchMode::BeamPost,
        SearchMode::PipePost,
        SearchMode::NaivePre,
        SearchMode::EarlyFilter,
        SearchMode::Gated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SearchMode::BeamPost => "beam-post",
            SearchMode::PipePost => "pipe-post",
            SearchMode::NaivePre => "naive-pre",
            SearchMode::EarlyFilter => "early-filter",
            SearchMode::Gated => "gated",
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam-post" => Ok(SearchMode::BeamPost),
            "pipe-post" => Ok(SearchMode::PipePost),
            "naive-pre" => Ok(SearchMode::NaivePre),
            "early-filter" => Ok(SearchMode::EarlyFilter),
            "gated" => Ok(SearchMode::Gated),
            other => Err(Error::param(format!("unknown mode '{other}'"))),
        }
    }
}

/// Per-query search parameters.
#[derive(Clone, Copy, Debug)]
pub struct SearchParams {
    /// Search list (frontier) size.
    pub l: usize,
    /// Result size.
    pub k: usize,
    /// Pipeline depth (beam width for `beam-post`).
    pub w: usize,
    pub mode: SearchMode,
}

impl SearchParams {
    pub fn new(mode: SearchMode, l: usize, k: usize, w: usize) -> Result<Self> {
        let p = SearchParams { l, k, w, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.l {
            return Err(Error::param("need 1 <= K <= L"));
        }
        if self.w == 0 {
            return Err(Error::param("W must be >= 1"));
        }
        Ok(())
    }
}

/// Per-query counters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QueryStats {
    /// Storage reads submitted.
    pub ios: u64,
    /// Filter-failing candidates expanded in memory (gated mode).
    pub tunnels: u64,
    /// Exact full-precision distance computations.
    pub exact_dists: u64,
    /// PQ distance computations (one per scored candidate).
    pub pq_dists: u64,
    /// Total expansions: completed reads plus tunneled candidates.
    pub hops: u64,
    /// Virtual completion time of the last processed event (simulated
    /// backend; zero on the file backend).
    pub virtual_latency_us: u64,
    /// Set if the safety cap on expansions fired (pathological instance).
    pub expansions_capped: bool,
}

impl QueryStats {
    pub fn accumulate(&mut self, other: &QueryStats) {
        self.ios += other.ios;
        self.tunnels += other.tunnels;
        self.exact_dists += other.exact_dists;
        self.pq_dists += other.pq_dists;
        self.hops += other.hops;
        self.virtual_latency_us += other.virtual_latency_us;
        self.expansions_capped |= other.expansions_capped;
    }
}

/// One result: node id plus its exact squared distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchHit {
    pub node: NodeId,
    pub dist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CandState {
    Pending,
    Reading,
    Tunneled,
    Dropped,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    node: NodeId,
    state: CandState,
}

/// Sorted bounded candidate list. Entries are ordered by (distance, id)
/// ascending; insertions within one expansion batch are admitted against the
/// threshold snapshot taken at batch start, and the list is pruned back to
/// `cap` entries when the batch finishes.
pub(crate) struct Frontier {
    entries: Vec<Entry>,
    cap: usize,
    pending_hint: usize,
}

impl Frontier {
    fn new(cap: usize) -> Self {
        Frontier { entries: Vec::with_capacity(2 * cap), cap, pending_hint: 0 }
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.entries.len()
    }

    /// Distance of the L-th best entry, or infinity while not full.
    fn batch_threshold(&self) -> f64 {
        if self.entries.len() >= self.cap {
            self.entries[self.cap - 1].dist
        } else {
            f64::INFINITY
        }
    }

    /// Admit `node` if `dist` strictly beats the batch threshold (or the
    /// frontier is not yet full). The caller guarantees `node` was never
    /// inserted before.
    fn insert(&mut self, node: NodeId, dist: f64, threshold: f64) -> bool {
        if dist >= threshold {
            return false;
        }
        let at = self.entries.partition_point(|e| (e.dist, e.node) < (dist, node));
        self.entries.insert(at, Entry { dist, node, state: CandState::Pending });
        debug_assert!(at == 0 || (self.entries[at - 1].dist, self.entries[at - 1].node) < (dist, node));
        debug_assert!(at + 1 >= self.entries.len()
            || (dist, node) < (self.entries[at + 1].dist, self.entries[at + 1].node));
        if at < self.pending_hint {
            self.pending_hint = at;
        }
        true
    }

    /// Prune back to `cap` entries (worst first).
    fn finish_batch(&mut self) {
        if self.entries.len() > self.cap {
            self.entries.truncate(self.cap);
        }
        if self.pending_hint > self.entries.len() {
            self.pending_hint = self.entries.len();
        }
    }

    /// Best entry still awaiting dispatch, if any.
    fn best_pending(&mut self) -> Option<(usize, NodeId, f64)> {
        while self.pending_hint < self.entries.len() {
            let e = self.entries[self.pending_hint];
            if e.state == CandState::Pending {
                return Some((self.pending_hint, e.node, e.dist));
            }
            self.pending_hint += 1;
        }
        None
    }

    fn mark(&mut self, idx: usize, state: CandState) {
        debug_assert_ne!(state, CandState::Pending);
        self.entries[idx].state = state;
    }

    fn has_pending(&mut self) -> bool {
        self.best_pending().is_some()
    }
}

/// All index components a query needs, shared read-only across threads.
pub struct SearchIndex {
    pub image: Arc<IndexImage>,
    pub codebook: PqCodebook,
    pub codes: PqCodes,
    pub filters: FilterStore,
    pub neighbors: NeighborStore,
    pub backend: BackendKind,
}

/// Per-query results and aggregate statistics from a batch run.
pub struct BatchResult {
    pub hits: Vec<Vec<SearchHit>>,
    pub stats: Vec<QueryStats>,
}

impl BatchResult {
    /// Exact sum of the per-query stats.
    pub fn total(&self) -> QueryStats {
        let mut t = QueryStats::default();
        for s in &self.stats {
            t.accumulate(s);
        }
        t
    }

    pub fn mean_ios(&self) -> f64 {
        self.total().ios as f64 / self.stats.len().max(1) as f64
    }
}

impl SearchIndex {
    /// Assemble from already-loaded components, validating consistency.
    pub fn assemble(
        image: Arc<IndexImage>,
        codebook: PqCodebook,
        codes: PqCodes,
        filters: FilterStore,
        neighbors: NeighborStore,
        backend: BackendKind,
    ) -> Result<Self> {
        let n = image.meta.count;
        if codes.count() as u64 != n {
            return Err(Error::Inconsistent(format!(
                "pq codes cover {} nodes, index has {n}",
                codes.count()
            )));
        }
        if codebook.dim() as u32 != image.meta.dim {
            return Err(Error::Inconsistent("pq codebook dim differs from index".into()));
        }
        if codebook.chunks() != codes.chunks() {
            return Err(Error::Inconsistent("pq codebook and codes disagree on chunks".into()));
        }
        filters.check_count(n)?;
        if neighbors.node_count() as u64 != n {
            return Err(Error::Inconsistent(format!(
                "neighbor store covers {} nodes, index has {n}",
                neighbors.node_count()
            )));
        }
        Ok(SearchIndex { image, codebook, codes, filters, neighbors, backend })
    }

    /// Open every component from files. The neighbor store is built here, at
    /// load time, by a sequential scan with the runtime `r_max`.
    pub fn open(
        index_path: &std::path::Path,
        pq_path: &std::path::Path,
        label_path: &std::path::Path,
        r_max: usize,
        backend: BackendKind,
    ) -> Result<Self> {
        let image = Arc::new(IndexImage::open(index_path)?);
        let (codebook, codes) = pq::load(pq_path)?;
        let filters = FilterStore::load(label_path)?;
        let neighbors = NeighborStore::build(index_path, r_max)?;
        Self::assemble(image, codebook, codes, filters, neighbors, backend)
    }

    /// Fresh backend session for one query.
    pub fn session(&self) -> Session {
        Session::new(self.image.clone(), self.backend)
    }

    pub fn search(&self, query: VectorRef<'_>, pred: &Predicate, params: &SearchParams) -> Result<(Vec<SearchHit>, QueryStats)> {
        let mut session = self.session();
        self.search_with(&mut session, query, pred, params)
    }

    /// Run one query over a caller-provided backend (used by the invariant
    /// suite to audit submissions).
    pub fn search_with<B: Backend>(
        &self,
        backend: &mut B,
        query: VectorRef<'_>,
        pred: &Predicate,
        params: &SearchParams,
    ) -> Result<(Vec<SearchHit>, QueryStats)> {
        params.validate()?;
        let meta = &self.image.meta;
        if query.len() as u32 != meta.dim {
            return Err(Error::DimMismatch(query.len(), meta.dim as usize));
        }
        if query.dtype() != meta.dtype {
            return Err(Error::DtypeMismatch);
        }
        // Stores are swappable; re-check counts cheaply.
        self.filters.check_count(meta.count)?;
        if self.neighbors.node_count() as u64 != meta.count {
            return Err(Error::Inconsistent("neighbor store size drifted".into()));
        }

        let lut = pq::build_lut(&self.codebook, query)?;
        let mut run = QueryRun {
            index: self,
            lut,
            query,
            pred,
            params: *params,
            seen: vec![false; meta.count as usize],
            frontier: Frontier::new(params.l),
            results: Vec::new(),
            stats: QueryStats::default(),
            hop_cap: 100 * params.l as u64,
        };
        match params.mode {
            SearchMode::BeamPost => run.beam_rounds(backend)?,
            _ => run.pipelined(backend)?,
        }
        run.finalize(backend)
    }

    /// Embarrassingly parallel batch over independent query sessions.
    /// Per-query results are identical to single-threaded execution on the
    /// simulated backend; aggregate stats are the exact per-query sums.
    pub fn batch_search(
        &self,
        queries: &[Vector],
        preds: &[Predicate],
        params: &SearchParams,
        threads: usize,
    ) -> Result<BatchResult> {
        if queries.len() != preds.len() {
            return Err(Error::param("queries and predicates must align"));
        }
        let out = crate::par::par_fill(queries.len(), threads, |i| {
            self.search(queries[i].as_ref(), &preds[i], params)
        })?;
        let (hits, stats) = out.into_iter().unzip();
        Ok(BatchResult { hits, stats })
    }
}

/// State for one in-flight query.
struct QueryRun<'a> {
    index: &'a SearchIndex,
    lut: QueryLut,
    query: VectorRef<'a>,
    pred: &'a Predicate,
    params: SearchParams,
    seen: Vec<bool>,
    frontier: Frontier,
    results: Vec<(f64, NodeId)>,
    stats: QueryStats,
    hop_cap: u64,
}

impl<'a> QueryRun<'a> {
    fn seed_entry_point(&mut self) {
        let medoid = self.index.image.meta.medoid;
        self.seen[medoid as usize] = true;
        let d = self.lut.score(self.index.codes.row(medoid)) as f64;
        self.stats.pq_dists += 1;
        let thr = self.frontier.batch_threshold();
        self.frontier.insert(medoid, d, thr);
        self.frontier.finish_batch();
    }

    fn note_hop(&mut self) {
        self.stats.hops += 1;
        if self.stats.hops >= self.hop_cap {
            self.stats.expansions_capped = true;
        }
    }

    /// Score `nbrs` against the query and admit frontier improvements. One
    /// insertion batch: the threshold is snapshotted up front and the list
    /// is pruned to L afterwards.
    fn expand(&mut self, nbrs: &[NodeId]) {
        let thr = self.frontier.batch_threshold();
        for &nb in nbrs {
            let slot = &mut self.seen[nb as usize];
            if *slot {
                continue;
            }
            *slot = true;
            let d = self.lut.score(self.index.codes.row(nb)) as f64;
            self.stats.pq_dists += 1;
            self.frontier.insert(nb, d, thr);
        }
        self.frontier.finish_batch();
    }

    /// Handle one completed read: exact distance (unless an early-filter
    /// miss), result accumulation, neighbor expansion from the record.
    fn process_completion(&mut self, rec: &crate::disk_index::NodeRecord) -> Result<()> {
        self.note_hop();
        let eligible = match self.params.mode {
            SearchMode::EarlyFilter => self.index.filters.evaluate(self.pred, rec.node)?,
            _ => true,
        };
        #[cfg(debug_assertions)]
        if matches!(self.params.mode, SearchMode::Gated | SearchMode::NaivePre) {
            debug_assert!(
                self.index.filters.evaluate(self.pred, rec.node)?,
                "pre-filter mode read a filter-failing node"
            );
        }
        if eligible {
            let d = crate::distance::l2_sq(self.query, rec.vector.as_ref())?;
            self.stats.exact_dists += 1;
            self.results.push((d, rec.node));
        }
        self.expand(&rec.neighbors);
        Ok(())
    }

    /// Asynchronous submit/poll loop shared by every mode except beam-post.
    fn pipelined<B: Backend>(&mut self, backend: &mut B) -> Result<()> {
        self.seed_entry_point();
        loop {
            if !self.stats.expansions_capped {
                while backend.in_flight() < self.params.w {
                    let Some((idx, node, _)) = self.frontier.best_pending() else {
                        break;
                    };
                    match self.params.mode {
                        SearchMode::Gated => {
                            if self.index.filters.evaluate(self.pred, node)? {
                                self.frontier.mark(idx, CandState::Reading);
                                backend.submit(node)?;
                            } else {
                                self.frontier.mark(idx, CandState::Tunneled);
                                self.stats.tunnels += 1;
                                self.note_hop();
                                let index: &SearchIndex = self.index;
                                let nbrs = index.neighbors.neighbors_of(node)?;
                                self.expand(nbrs);
                                if self.stats.expansions_capped {
                                    break;
                                }
                            }
                        }
                        SearchMode::NaivePre => {
                            if self.index.filters.evaluate(self.pred, node)? {
                                self.frontier.mark(idx, CandState::Reading);
                                backend.submit(node)?;
                            } else {
                                self.frontier.mark(idx, CandState::Dropped);
                            }
                        }
                        _ => {
                            self.frontier.mark(idx, CandState::Reading);
                            backend.submit(node)?;
                        }
                    }
                }
            }
            if backend.in_flight() == 0 {
                if self.stats.expansions_capped || !self.frontier.has_pending() {
                    break;
                }
                continue;
            }
            for rec in backend.poll()? {
                self.process_completion(&rec)?;
            }
        }
        Ok(())
    }

    /// Synchronous batch-and-wait rounds (classic disk beam search).
    fn beam_rounds<B: Backend>(&mut self, backend: &mut B) -> Result<()> {
        self.seed_entry_point();
        loop {
            if self.stats.expansions_capped {
                break;
            }
            let mut batch = 0usize;
            while batch < self.params.w {
                let Some((idx, node, _)) = self.frontier.best_pending() else {
                    break;
                };
                self.frontier.mark(idx, CandState::Reading);
                backend.submit(node)?;
                batch += 1;
            }
            if batch == 0 {
                break;
            }
            let mut done = 0usize;
            while done < batch {
                for rec in backend.poll()? {
                    done += 1;
                    self.process_completion(&rec)?;
                }
            }
        }
        Ok(())
    }

    fn finalize<B: Backend>(mut self, backend: &mut B) -> Result<(Vec<SearchHit>, QueryStats)> {
        if self.stats.expansions_capped {
            log::warn!(
                "search hit the expansion safety cap ({} hops at L={})",
                self.stats.hops,
                self.params.l
            );
        }
        // Result eligibility goes through the same filter store in every
        // mode; for pre-filter modes this is a no-op by construction.
        let mut eligible = Vec::with_capacity(self.results.len());
        for (d, node) in self.results.drain(..) {
            if self.index.filters.evaluate(self.pred, node)? {
                eligible.push((d, node));
            }
        }
        eligible.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eligible.truncate(self.params.k);

        let io = backend.stats();
        self.stats.ios = io.reads_submitted;
        self.stats.virtual_latency_us = io.virtual_time_us;
        debug_assert_eq!(io.reads_completed, io.reads_submitted, "reads left in flight");
        debug_assert!(io.max_in_flight as usize <= self.params.w, "W bound violated");

        let hits = eligible.into_iter().map(|(dist, node)| SearchHit { node, dist }).collect();
        Ok((hits, self.stats))
    }
}
