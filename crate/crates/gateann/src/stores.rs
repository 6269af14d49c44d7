//! Memory-resident stores built at load time: the filter store (pre-I/O
//! predicate evaluation) and the neighbor store (in-memory adjacency for
//! tunneling). Neither modifies the disk index; the filter store is loaded
//! from a separate metadata file and can be replaced independently.
//!
//! Label file (single-label or bin-label, little-endian): magic `GANNLBL1` |
//! u64 N | u16 num_classes | N bytes. Multi-label file: magic `GANNLBL2` |
//! u64 N | u64 nnz | u64 x (N+1) row offsets | u32 x nnz sorted tag ids.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::byteio;
use crate::dataset::NodeId;
use crate::error::{Error, Result};
use crate::filter::{is_subset, Predicate};

pub const LABEL_MAGIC: &[u8; 8] = b"GANNLBL1";
pub const MULTILABEL_MAGIC: &[u8; 8] = b"GANNLBL2";

/// Per-node filter metadata with O(1) row access by node id.
///
/// Single-label and bin-label stores share the byte-array representation
/// (their predicates both reduce to byte equality); multi-label stores keep
/// row offsets plus sorted tag ids.
pub enum FilterStore {
    Labels { labels: Vec<u8>, num_classes: u16 },
    Tags { offsets: Vec<u64>, tags: Vec<u32> },
}

impl FilterStore {
    pub fn from_labels(labels: Vec<u8>, num_classes: u16) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::param("num_classes must be >= 1"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as u16 >= num_classes) {
            return Err(Error::param(format!("label {bad} >= num_classes {num_classes}")));
        }
        Ok(FilterStore::Labels { labels, num_classes })
    }

    /// Build from CSR rows; each row must be strictly sorted.
    pub fn from_tag_rows(offsets: Vec<u64>, tags: Vec<u32>) -> Result<Self> {
        if offsets.is_empty() || offsets[0] != 0 || *offsets.last().unwrap() != tags.len() as u64 {
            return Err(Error::param("malformed CSR offsets"));
        }
        for w in offsets.windows(2) {
            if w[0] > w[1] {
                return Err(Error::param("CSR offsets must be non-decreasing"));
            }
            let row = &tags[w[0] as usize..w[1] as usize];
            if row.windows(2).any(|t| t[0] >= t[1]) {
                return Err(Error::param("tag rows must be strictly sorted"));
            }
        }
        Ok(FilterStore::Tags { offsets, tags })
    }

    pub fn len(&self) -> usize {
        match self {
            FilterStore::Labels { labels, .. } => labels.len(),
            FilterStore::Tags { offsets, .. } => offsets.len() - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> Option<u16> {
        match self {
            FilterStore::Labels { num_classes, .. } => Some(*num_classes),
            FilterStore::Tags { .. } => None,
        }
    }

    pub fn label(&self, id: NodeId) -> Option<u8> {
        match self {
            FilterStore::Labels { labels, .. } => labels.get(id as usize).copied(),
            FilterStore::Tags { .. } => None,
        }
    }

    pub fn tags(&self, id: NodeId) -> Option<&[u32]> {
        match self {
            FilterStore::Tags { offsets, tags } => {
                let i = id as usize;
                if i + 1 >= offsets.len() {
                    return None;
                }
                Some(&tags[offsets[i] as usize..offsets[i + 1] as usize])
            }
            FilterStore::Labels { .. } => None,
        }
    }

    /// O(1)-per-row predicate evaluation by node id.
    #[inline]
    pub fn evaluate(&self, pred: &Predicate, id: NodeId) -> Result<bool> {
        match (pred, self) {
            (Predicate::Equality(c), FilterStore::Labels { labels, .. }) => {
                Ok(labels[id as usize] == *c)
            }
            (Predicate::RangeBin(b), FilterStore::Labels { labels, .. }) => {
                Ok(labels[id as usize] == *b)
            }
            (Predicate::Subset(q), FilterStore::Tags { offsets, tags }) => {
                let i = id as usize;
                Ok(is_subset(q, &tags[offsets[i] as usize..offsets[i + 1] as usize]))
            }
            _ => Err(Error::KindMismatch),
        }
    }

    /// Exact selectivity: the fraction of nodes satisfying `pred`, computed
    /// from the stored rows (not sampled).
    pub fn selectivity(&self, pred: &Predicate) -> Result<f64> {
        let n = self.len();
        let mut hits = 0usize;
        for id in 0..n {
            if self.evaluate(pred, id as NodeId)? {
                hits += 1;
            }
        }
        Ok(hits as f64 / n as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        match self {
            FilterStore::Labels { labels, num_classes } => {
                w.write_all(LABEL_MAGIC)?;
                byteio::write_u64(&mut w, labels.len() as u64)?;
                byteio::write_u16(&mut w, *num_classes)?;
                w.write_all(labels)?;
            }
            FilterStore::Tags { offsets, tags } => {
                w.write_all(MULTILABEL_MAGIC)?;
                byteio::write_u64(&mut w, (offsets.len() - 1) as u64)?;
                byteio::write_u64(&mut w, tags.len() as u64)?;
                for &o in offsets {
                    byteio::write_u64(&mut w, o)?;
                }
                for &t in tags {
                    byteio::write_u32(&mut w, t)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Load either label-file flavor; the magic selects the representation.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic == LABEL_MAGIC {
            let n = byteio::read_u64(&mut r)? as usize;
            let num_classes = byteio::read_u16(&mut r)?;
            let mut labels = vec![0u8; n];
            r.read_exact(&mut labels)?;
            // A trailing byte would mean a count mismatch.
            let mut probe = [0u8; 1];
            if r.read(&mut probe)? != 0 {
                return Err(Error::format("label file longer than declared count"));
            }
            FilterStore::from_labels(labels, num_classes)
                .map_err(|e| Error::format(format!("label file: {e}")))
        } else if &magic == MULTILABEL_MAGIC {
            let n = byteio::read_u64(&mut r)? as usize;
            let nnz = byteio::read_u64(&mut r)? as usize;
            let mut offsets = Vec::with_capacity(n + 1);
            for _ in 0..=n {
                offsets.push(byteio::read_u64(&mut r)?);
            }
            let mut tags = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                tags.push(byteio::read_u32(&mut r)?);
            }
            FilterStore::from_tag_rows(offsets, tags)
                .map_err(|e| Error::format(format!("multi-label file: {e}")))
        } else {
            Err(Error::format(format!("{}: not a label file", path.display())))
        }
    }

    /// Verify the store covers exactly `n` nodes.
    pub fn check_count(&self, n: u64) -> Result<()> {
        if self.len() as u64 != n {
            return Err(Error::Inconsistent(format!(
                "filter store covers {} nodes, index has {n}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Fixed-stride in-memory adjacency table: per node, word 0 holds the
/// neighbor count k <= R_max and words 1..=k the first k neighbor ids from
/// the node's disk record, order preserved. Total size is exactly
/// `N x (1 + R_max) x 4` bytes.
pub struct NeighborStore {
    n: usize,
    r_max: usize,
    table: Vec<u32>,
}

/// Exact byte size of a neighbor store: `N x (1 + R_max) x 4`.
pub fn neighbor_store_bytes(n: u64, r_max: u64) -> u64 {
    n * (1 + r_max) * 4
}

impl NeighborStore {
    /// Build by one sequential scan over the on-disk index, retaining the
    /// first `min(k, R_max)` neighbor ids of every record. The table is
    /// fully materialized before queries begin.
    pub fn build(index_path: &Path, r_max: usize) -> Result<Self> {
        if r_max == 0 {
            return Err(Error::param("R_max must be >= 1"));
        }
        let mut table: Vec<u32> = Vec::new();
        let stride = 1 + r_max;
        let meta = crate::disk_index::scan_records(index_path, |rec| {
            let keep = rec.neighbors.len().min(r_max);
            let base = table.len();
            table.resize(base + stride, 0);
            table[base] = keep as u32;
            table[base + 1..base + 1 + keep].copy_from_slice(&rec.neighbors[..keep]);
            Ok(())
        })?;
        let n = meta.count as usize;
        debug_assert_eq!(table.len(), n * stride);
        Ok(NeighborStore { n, r_max, table })
    }

    /// An empty store of the given shape (all counts zero). Used for sizing
    /// checks and synthetic instances.
    pub fn with_shape(n: usize, r_max: usize) -> Self {
        NeighborStore { n, r_max, table: vec![0; n * (1 + r_max)] }
    }

    /// Build directly from adjacency lists (testing and synthetic instances).
    pub fn from_adjacency(adjacency: &[Vec<NodeId>], r_max: usize) -> Self {
        let mut store = Self::with_shape(adjacency.len(), r_max);
        let stride = 1 + r_max;
        for (i, nbrs) in adjacency.iter().enumerate() {
            let keep = nbrs.len().min(r_max);
            store.table[i * stride] = keep as u32;
            store.table[i * stride + 1..i * stride + 1 + keep].copy_from_slice(&nbrs[..keep]);
        }
        store
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    /// Allocated table size in bytes.
    pub fn byte_len(&self) -> usize {
        self.table.len() * 4
    }

    /// O(1) view of node `id`'s stored neighbors (no copy).
    #[inline]
    pub fn neighbors_of(&self, id: NodeId) -> Result<&[u32]> {
        let i = id as usize;
        if i >= self.n {
            return Err(Error::NodeOutOfRange(id, self.n as u64));
        }
        let stride = 1 + self.r_max;
        let base = i * stride;
        let k = self.table[base] as usize;
        Ok(&self.table[base + 1..base + 1 + k])
    }
}
