//! Disk-resident graph search for filtered vector queries.
//!
//! The engine keeps full-precision vectors and graph adjacency in
//! sector-aligned records on storage, with compressed (PQ) vectors, a filter
//! store, and a truncated neighbor store in memory. Filter predicates are
//! checked *before* any storage read: candidates that pass take the normal
//! asynchronous read path, candidates that fail are traversed purely in
//! memory ("graph tunneling") using the neighbor store and PQ distances, so
//! no read is ever spent on a node that cannot appear in the result.
//! Post-filter, naive pre-filter, and early-filter baselines share the same
//! traversal skeleton for controlled comparisons.
//!
//! # Crate layout
//!
//! * [`dataset`] - vector datasets and the `GANNVEC1` file format.
//! * [`filter`] - predicates, node metadata, and predicate evaluation.
//! * [`distance`] - squared-L2 kernels (integer-exact for u8).
//! * [`recall`] - Recall@K against exact filtered ground truth.
//! * [`pq`] - product quantization: training, codes, query LUTs, ADC.
//! * [`kmeans`] - the seeded deterministic k-means behind PQ and labels.
//! * [`graph`] - Vamana-style graph construction and the medoid.
//! * [`disk_index`] - the sector-aligned `GANNDSK1` index format.
//! * [`stores`] - the in-memory filter store and neighbor store.
//! * [`storage`] - submit/poll backends (deterministic simulator + files).
//! * [`search`] - the five engines: beam-post, pipe-post, naive-pre,
//!   early-filter, and gated (pre-I/O filtering with tunneling).
//! * [`workload`] - synthetic data/label/query generators and ground truth.
//! * [`bench`] - sweeps, paired I/O-reduction reports, CSV emission.
//! * [`verify`] - the structural invariant suite behind `gateann verify`.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release -p gateann --example end_to_end
//! cargo run --release -p gateann --example tunneling_walkthrough
//! cargo run --release -p gateann --example io_reduction
//! cargo run --release -p gateann --example prefilter_collapse
//! cargo run --release -p gateann --example early_filter_ablation
//! cargo run --release -p gateann --example memory_sizing
//! cargo run --release -p gateann --example w_sweep
//! cargo run --release -p gateann --example label_schemes
//! cargo run --release -p gateann --example range_and_tags
//! ```
//!
//! The `gateann` binary wires the same pieces into reproducible pipelines
//! (`gen-data`, `gen-labels`, `build`, `gt`, `search`, `bench`, `verify`).

pub mod bench;
mod byteio;
pub mod dataset;
pub mod disk_index;
pub mod distance;
pub mod error;
pub mod filter;
pub mod graph;
pub mod kmeans;
mod par;
pub mod pq;
pub mod recall;
pub mod rng;
pub mod search;
pub mod storage;
pub mod stores;
pub mod verify;
pub mod workload;

pub use dataset::{Dtype, NodeId, Vector, VectorDataset, VectorRef};
pub use error::{Error, Result};
pub use filter::{evaluate, NodeMeta, Predicate};
pub use graph::{build_vamana, compute_medoid, BuildParams, InMemGraph};
pub use recall::recall_at_k;
pub use search::{BatchResult, QueryStats, SearchHit, SearchIndex, SearchMode, SearchParams};
pub use storage::{Backend, BackendKind, IndexImage, IoStats, Session};
pub use stores::{neighbor_store_bytes, FilterStore, NeighborStore};
