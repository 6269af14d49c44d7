//! Storage backends with asynchronous submit/poll semantics.
//!
//! A backend session is private to one query: it owns its ticket queue and
//! (for the simulated backend) its virtual clock, over a shared read-only
//! index image. Sessions on different threads are independent.
//!
//! The simulated backend is the instrumented, fully deterministic model used
//! for verification: every read completes exactly `latency_us` of virtual
//! time after submission with unlimited device parallelism, and completions
//! are delivered in FIFO submission order. This isolates I/O *count* from
//! device contention. The file backend serves the same records with
//! positioned reads; its completions are also FIFO but it keeps no virtual
//! clock.

use std::collections::VecDeque;
use std::fs::File;
use std::os::unix::fs::FileExt;
use std::path::Path;
use std::sync::Arc;

use crate::dataset::NodeId;
use crate::disk_index::{self, DiskIndexMeta, NodeRecord};
use crate::error::{Error, Result};

/// Default virtual latency of one simulated read, in microseconds.
pub const DEFAULT_SIM_LATENCY_US: u64 = 100;

/// A shared, read-only view of a disk index file. Records are fetched with
/// positioned reads, so any number of sessions can share one image.
pub struct IndexImage {
    file: File,
    pub meta: DiskIndexMeta,
}

impl IndexImage {
    pub fn open(path: &Path) -> Result<Self> {
        let meta = disk_index::read_meta(path)?;
        let file = File::open(path)?;
        Ok(IndexImage { file, meta })
    }

    /// Read and parse node `id`'s record.
    pub fn read_record(&self, id: NodeId) -> Result<NodeRecord> {
        if id as u64 >= self.meta.count {
            return Err(Error::NodeOutOfRange(id, self.meta.count));
        }
        let mut sector = vec![0u8; self.meta.sector_size as usize];
        self.file.read_exact_at(&mut sector, self.meta.record_offset(id))?;
        disk_index::parse_record(&self.meta, id, &sector)
    }
}

/// Monotone per-session I/O counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoStats {
    pub reads_submitted: u64,
    pub reads_completed: u64,
    /// Current virtual time in microseconds (simulated backend only).
    pub virtual_time_us: u64,
    /// High-water mark of concurrently in-flight reads.
    pub max_in_flight: u32,
}

/// Handle for one in-flight read.
#[derive(Clone, Copy, Debug)]
pub struct ReadTicket {
    pub node: NodeId,
    pub submit_time_us: u64,
}

/// Submit/poll storage contract. `submit` is non-blocking; `poll` returns
/// zero or more completed records. Callers enforce their own bound on
/// outstanding reads.
pub trait Backend {
    fn submit(&mut self, node: NodeId) -> Result<ReadTicket>;
    fn poll(&mut self) -> Result<Vec<NodeRecord>>;
    fn in_flight(&self) -> usize;
    fn stats(&self) -> IoStats;
    fn reset_stats(&mut self);
    /// After close, submissions fail.
    fn close(&mut self);
}

/// Backend selection for a search engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Sim { latency_us: u64 },
    File,
}

impl Default for BackendKind {
    fn default() -> Self {
        BackendKind::Sim { latency_us: DEFAULT_SIM_LATENCY_US }
    }
}

/// Deterministic simulated backend with a virtual clock.
pub struct SimBackend {
    image: Arc<IndexImage>,
    latency_us: u64,
    now_us: u64,
    queue: VecDeque<(NodeId, u64)>,
    stats: IoStats,
    closed: bool,
}

impl SimBackend {
    pub fn new(image: Arc<IndexImage>, latency_us: u64) -> Self {
        SimBackend {
            image,
            latency_us,
            now_us: 0,
            queue: VecDeque::new(),
            stats: IoStats::default(),
            closed: false,
        }
    }

    pub fn virtual_now(&self) -> u64 {
        self.now_us
    }
}

impl Backend for SimBackend {
    fn submit(&mut self, node: NodeId) -> Result<ReadTicket> {
        if self.closed {
            return Err(Error::BackendClosed);
        }
        if node as u64 >= self.image.meta.count {
            return Err(Error::NodeOutOfRange(node, self.image.meta.count));
        }
        let ticket = ReadTicket { node, submit_time_us: self.now_us };
        self.queue.push_back((node, self.now_us + self.latency_us));
        self.stats.reads_submitted += 1;
        self.stats.max_in_flight = self.stats.max_in_flight.max(self.queue.len() as u32);
        Ok(ticket)
    }

    /// Return completed reads in FIFO order. If nothing has completed yet
    /// but reads are in flight, the virtual clock advances to the earliest
    /// completion time.
    fn poll(&mut self) -> Result<Vec<NodeRecord>> {
        let Some(&(_, first_done)) = self.queue.front() else {
            self.stats.virtual_time_us = self.now_us;
            return Ok(Vec::new());
        };
        if first_done > self.now_us {
            self.now_us = first_done;
        }
        let mut out = Vec::new();
        while let Some(&(node, done)) = self.queue.front() {
            if done > self.now_us {
                break;
            }
            self.queue.pop_front();
            out.push(self.image.read_record(node)?);
            self.stats.reads_completed += 1;
        }
        self.stats.virtual_time_us = self.now_us;
        Ok(out)
    }

    fn in_flight(&self) -> usize {
        self.queue.len()
    }

    fn stats(&self) -> IoStats {
        let mut s = self.stats;
        s.virtual_time_us = self.now_us;
        s
    }

    fn reset_stats(&mut self) {
        self.stats = IoStats::default();
        self.now_us = 0;
    }

    fn close(&mut self) {
        self.closed = true;
    }
}

/// Real-file backend: submissions queue, positioned reads run at poll time,
/// completions come back in submission order.
pub struct FileBackend {
    image: Arc<IndexImage>,
    pending: VecDeque<NodeId>,
    stats: IoStats,
    closed: bool,
}

impl FileBackend {
    pub fn new(image: Arc<IndexImage>) -> Self {
        FileBackend { image, pending: VecDeque::new(), stats: IoStats::default(), closed: false }
    }
}

impl Backend for FileBackend {
    fn submit(&mut self, node: NodeId) -> Result<ReadTicket> {
        if self.closed {
            return Err(Error::BackendClosed);
        }
        if node as u64 >= self.image.meta.count {
            return Err(Error::NodeOutOfRange(node, self.image.meta.count));
        }
        self.pending.push_back(node);
        self.stats.reads_submitted += 1;
        self.stats.max_in_flight = self.stats.max_in_flight.max(self.pending.len() as u32);
        Ok(ReadTicket { node, submit_time_us: 0 })
    }

    fn poll(&mut self) -> Result<Vec<NodeRecord>> {
        let mut out = Vec::with_capacity(self.pending.len());
        while let Some(node) = self.pending.pop_front() {
            out.push(self.image.read_record(node)?);
            self.stats.reads_completed += 1;
        }
        Ok(out)
    }

    fn in_flight(&self) -> usize {
        self.pending.len()
    }

    fn stats(&self) -> IoStats {
        self.stats
    }

    fn reset_stats(&mut self) {
        self.stats = IoStats::default();
    }

    fn close(&mut self) {
        self.closed = true;
    }
}

/// Either backend behind one session type.
pub enum Session {
    Sim(SimBackend),
    File(FileBackend),
}

impl Session {
    pub fn new(image: Arc<IndexImage>, kind: BackendKind) -> Self {
        match kind {
            BackendKind::Sim { latency_us } => Session::Sim(SimBackend::new(image, latency_us)),
            BackendKind::File => Session::File(FileBackend::new(image)),
        }
    }
}

impl Backend for Session {
    fn submit(&mut self, node: NodeId) -> Result<ReadTicket> {
        match self {
            Session::Sim(b) => b.submit(node),
            Session::File(b) => b.submit(node),
        }
    }

    fn poll(&mut self) -> Result<Vec<NodeRecord>> {
        match self {
            Session::Sim(b) => b.poll(),
            Session::File(b) => b.poll(),
        }
    }

    fn in_flight(&self) -> usize {
        match self {
            Session::Sim(b) => b.in_flight(),
            Session::File(b) => b.in_flight(),
        }
    }

    fn stats(&self) -> IoStats {
        match self {
            Session::Sim(b) => b.stats(),
            Session::File(b) => b.stats(),
        }
    }

    fn reset_stats(&mut self) {
        match self {
            Session::Sim(b) => b.reset_stats(),
            Session::File(b) => b.reset_stats(),
        }
    }

    fn close(&mut self) {
        match self {
            Session::Sim(b) => b.close(),
            Session::File(b) => b.close(),
        }
    }
}

/// Wrapper that records every submitted node id; used by the invariant suite
/// to audit which nodes a search actually read.
pub struct RecordingBackend<B: Backend> {
    pub inner: B,
    pub submitted: Vec<NodeId>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend { inner, submitted: Vec::new() }
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn submit(&mut self, node: NodeId) -> Result<ReadTicket> {
        let t = self.inner.submit(node)?;
        self.submitted.push(node);
        Ok(t)
    }

    fn poll(&mut self) -> Result<Vec<NodeRecord>> {
        self.inner.poll()
    }

    fn in_flight(&self) -> usize {
        self.inner.in_flight()
    }

    fn stats(&self) -> IoStats {
        self.inner.stats()
    }

    fn reset_stats(&mut self) {
        self.inner.reset_stats()
    }

    fn close(&mut self) {
        self.inner.close()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VectorDataset;
    use crate::graph::{build_vamana, BuildParams};
    use crate::rng::Rng64;
    use std::path::Path;

    fn test_image(dir: &Path, n: usize, seed: u64) -> Arc<IndexImage> {
        let mut rng = Rng64::new(seed);
        let data: Vec<u8> = (0..n * 4).map(|_| rng.below(256) as u8).collect();
        let ds = VectorDataset::from_u8(n, 4, data).unwrap();
        let g = build_vamana(&ds, &BuildParams::new(4, 8, 1.2, seed).unwrap()).unwrap();
        let p = dir.join("idx.bin");
        crate::disk_index::write_disk_index(&g, &ds, 256, &p).unwrap();
        Arc::new(IndexImage::open(&p).unwrap())
    }

    #[test]
    fn submit_then_poll_matches_direct_read() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 60, 1);
        let mut b = SimBackend::new(img.clone(), 100);
        let t = b.submit(5).unwrap();
        assert_eq!(t.node, 5);
        assert_eq!(t.submit_time_us, 0);
        assert_eq!(b.stats().reads_submitted, 1);
        let recs = b.poll().unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0], img.read_record(5).unwrap());
        // Completion virtual time = submit time + latency.
        assert_eq!(b.virtual_now(), 100);
    }

    #[test]
    fn poll_empty_and_fifo_order() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 60, 2);
        let mut b = SimBackend::new(img, 100);
        assert!(b.poll().unwrap().is_empty());
        b.submit(1).unwrap();
        b.submit(2).unwrap();
        b.submit(3).unwrap();
        let ids: Vec<u32> = b.poll().unwrap().iter().map(|r| r.node).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(b.stats().reads_completed, b.stats().reads_submitted);
    }

    #[test]
    fn staggered_submissions_complete_in_waves() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 60, 3);
        let mut b = SimBackend::new(img, 100);
        b.submit(1).unwrap();
        let first = b.poll().unwrap(); // advances clock to 100
        assert_eq!(first.len(), 1);
        b.submit(2).unwrap(); // completes at 200
        b.submit(3).unwrap(); // completes at 200
        let second = b.poll().unwrap();
        assert_eq!(second.len(), 2);
        assert_eq!(b.virtual_now(), 200);
    }

    #[test]
    fn deterministic_completion_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 60, 4);
        let run = |img: Arc<IndexImage>| {
            let mut b = SimBackend::new(img, 100);
            let mut log = Vec::new();
            for id in [9u32, 3, 14, 27] {
                b.submit(id).unwrap();
            }
            for r in b.poll().unwrap() {
                log.push((r.node, b.virtual_now()));
            }
            b.submit(30).unwrap();
            for r in b.poll().unwrap() {
                log.push((r.node, b.virtual_now()));
            }
            log
        };
        assert_eq!(run(img.clone()), run(img));
    }

    #[test]
    fn stats_reset_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 30, 5);
        let mut b = SimBackend::new(img, 50);
        b.submit(0).unwrap();
        b.poll().unwrap();
        b.reset_stats();
        assert_eq!(b.stats(), IoStats::default());
        b.reset_stats(); // idempotent
        assert_eq!(b.stats(), IoStats::default());
        b.submit(1).unwrap();
        b.submit(2).unwrap();
        assert_eq!(b.stats().reads_submitted, 2);

        assert!(matches!(b.submit(1000), Err(Error::NodeOutOfRange(1000, 30))));
        b.close();
        assert!(matches!(b.submit(0), Err(Error::BackendClosed)));
    }

    #[test]
    fn file_backend_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 40, 6);
        let mut b = FileBackend::new(img.clone());
        b.submit(7).unwrap();
        b.submit(11).unwrap();
        assert_eq!(b.in_flight(), 2);
        let recs = b.poll().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0], img.read_record(7).unwrap());
        assert_eq!(recs[1], img.read_record(11).unwrap());
        assert_eq!(b.in_flight(), 0);
    }

    #[test]
    fn recording_backend_logs_submissions() {
        let dir = tempfile::tempdir().unwrap();
        let img = test_image(dir.path(), 40, 7);
        let mut b = RecordingBackend::new(SimBackend::new(img, 100));
        b.submit(4).unwrap();
        b.submit(9).unwrap();
        b.poll().unwrap();
        assert_eq!(b.submitted, vec![4, 9]);
    }
}
