//! Sector-aligned on-disk index format.
//!
//! Little-endian layout. The header occupies the first sector: magic
//! `GANNDSK1` | u32 sector_size | u64 count | u32 dim | u32 dtype | u32 R |
//! u32 medoid | zero padding. Node `i`'s record starts at byte
//! `sector_size * (1 + i)` and holds the full-precision vector, a u32
//! neighbor count `k`, `k` u32 neighbor ids, and zero padding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::byteio;
use crate::dataset::{Dtype, NodeId, Vector, VectorDataset};
use crate::error::{Error, Result};
use crate::graph::InMemGraph;

pub const DISK_MAGIC: &[u8; 8] = b"GANNDSK1";

/// Default sector size in bytes.
pub const DEFAULT_SECTOR_SIZE: u32 = 4096;

/// Header metadata of a disk index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiskIndexMeta {
    pub sector_size: u32,
    pub count: u64,
    pub dim: u32,
    pub dtype: Dtype,
    pub max_degree: u32,
    pub medoid: u32,
}

impl DiskIndexMeta {
    /// Byte offset of node `i`'s record.
    pub fn record_offset(&self, node: NodeId) -> u64 {
        self.sector_size as u64 * (1 + node as u64)
    }

    /// Bytes of meaningful payload in a full record.
    pub fn max_payload_bytes(&self) -> usize {
        payload_bytes(self.dim as usize, self.dtype, self.max_degree as usize)
    }

    pub fn vector_bytes(&self) -> usize {
        self.dim as usize * self.dtype.elem_bytes()
    }
}

/// Per-node payload size: vector bytes + count word + `r` neighbor ids.
pub fn payload_bytes(dim: usize, dtype: Dtype, r: usize) -> usize {
    dim * dtype.elem_bytes() + 4 + 4 * r
}

/// One node's full record content.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub node: NodeId,
    pub vector: Vector,
    pub neighbors: Vec<NodeId>,
}

/// Serialize a graph and its dataset into the sector-aligned format.
pub fn write_disk_index(graph: &InMemGraph, dataset: &VectorDataset, sector_size: u32, path: &Path) -> Result<()> {
    let n = dataset.count();
    if graph.adjacency.len() != n {
        return Err(Error::Inconsistent("graph and dataset node counts differ".into()));
    }
    let payload = payload_bytes(dataset.dim(), dataset.dtype(), graph.max_degree);
    if payload > sector_size as usize {
        return Err(Error::param(format!(
            "record payload {payload} B exceeds sector size {sector_size} B"
        )));
    }

    let mut w = BufWriter::new(File::create(path)?);
    let mut sector = vec![0u8; sector_size as usize];

    // Header sector.
    {
        let mut cur = &mut sector[..];
        cur.write_all(DISK_MAGIC)?;
        cur.write_all(&sector_size.to_le_bytes())?;
        cur.write_all(&(n as u64).to_le_bytes())?;
        cur.write_all(&(dataset.dim() as u32).to_le_bytes())?;
        cur.write_all(&dataset.dtype().code().to_le_bytes())?;
        cur.write_all(&(graph.max_degree as u32).to_le_bytes())?;
        cur.write_all(&graph.medoid.to_le_bytes())?;
        w.write_all(&sector)?;
    }

    for i in 0..n {
        sector.fill(0);
        let mut off = 0usize;
        match dataset.row(i as NodeId) {
            crate::dataset::VectorRef::U8(v) => {
                sector[..v.len()].copy_from_slice(v);
                off += v.len();
            }
            crate::dataset::VectorRef::F32(v) => {
                for &x in v {
                    sector[off..off + 4].copy_from_slice(&x.to_le_bytes());
                    off += 4;
                }
            }
        }
        let nbrs = &graph.adjacency[i];
        sector[off..off + 4].copy_from_slice(&(nbrs.len() as u32).to_le_bytes());
        off += 4;
        for &v in nbrs {
            sector[off..off + 4].copy_from_slice(&v.to_le_bytes());
            off += 4;
        }
        w.write_all(&sector)?;
    }
    w.flush()?;
    Ok(())
}

/// Read and validate the header sector.
pub fn read_meta(path: &Path) -> Result<DiskIndexMeta> {
    let mut f = File::open(path)?;
    let mut head = [0u8; 36];
    f.read_exact(&mut head)?;
    parse_meta(&head, path)
}

fn parse_meta(head: &[u8], path: &Path) -> Result<DiskIndexMeta> {
    if &head[..8] != DISK_MAGIC {
        return Err(Error::format(format!("{}: not a disk index", path.display())));
    }
    let sector_size = byteio::u32_at(head, 8);
    let count = u64::from_le_bytes(head[12..20].try_into().unwrap());
    let dim = byteio::u32_at(head, 20);
    let dtype = Dtype::from_code(byteio::u32_at(head, 24))?;
    let max_degree = byteio::u32_at(head, 28);
    let medoid = byteio::u32_at(head, 32);
    if sector_size < 64 || dim == 0 || count == 0 || medoid as u64 >= count {
        return Err(Error::format("disk index header fails sanity checks"));
    }
    let meta = DiskIndexMeta { sector_size, count, dim, dtype, max_degree, medoid };
    if meta.max_payload_bytes() > sector_size as usize {
        return Err(Error::format("disk index header: payload exceeds sector"));
    }
    Ok(meta)
}

/// Parse one record's sector bytes.
pub fn parse_record(meta: &DiskIndexMeta, node: NodeId, sector: &[u8]) -> Result<NodeRecord> {
    if sector.len() < meta.sector_size as usize {
        return Err(Error::format("short sector"));
    }
    let dim = meta.dim as usize;
    let vec_bytes = meta.vector_bytes();
    let vector = match meta.dtype {
        Dtype::U8 => Vector::U8(sector[..dim].to_vec()),
        Dtype::F32 => {
            let mut v = Vec::with_capacity(dim);
            for d in 0..dim {
                v.push(byteio::f32_at(sector, d * 4));
            }
            Vector::F32(v)
        }
    };
    let k = byteio::u32_at(sector, vec_bytes) as usize;
    if k > meta.max_degree as usize {
        return Err(Error::format(format!("record {node}: neighbor count {k} > R")));
    }
    let mut neighbors = Vec::with_capacity(k);
    for j in 0..k {
        let id = byteio::u32_at(sector, vec_bytes + 4 + 4 * j);
        if id as u64 >= meta.count {
            return Err(Error::format(format!("record {node}: neighbor id {id} out of range")));
        }
        neighbors.push(id);
    }
    Ok(NodeRecord { node, vector, neighbors })
}

/// Sequentially scan every record, invoking `f` in node order. Used for
/// load-time store construction.
pub fn scan_records(path: &Path, mut f: impl FnMut(&NodeRecord) -> Result<()>) -> Result<DiskIndexMeta> {
    let file = File::open(path)?;
    let mut r = BufReader::with_capacity(1 << 20, file);
    let mut head = [0u8; 36];
    r.read_exact(&mut head)?;
    let meta = parse_meta(&head, path)?;
    // Skip the rest of the header sector.
    let mut skip = vec![0u8; meta.sector_size as usize - 36];
    r.read_exact(&mut skip)?;

    let mut sector = vec![0u8; meta.sector_size as usize];
    for node in 0..meta.count {
        r.read_exact(&mut sector)?;
        let rec = parse_record(&meta, node as NodeId, &sector)?;
        f(&rec)?;
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BuildParams;
    use crate::rng::Rng64;

    #[test]
    fn payload_arithmetic() {
        // dim=128 u8, R=96 -> 128 + 4 + 384 = 516 <= 4096
        assert_eq!(payload_bytes(128, Dtype::U8, 96), 516);
        // dim=96 f32, R=96 -> 384 + 4 + 384 = 772 <= 4096
        assert_eq!(payload_bytes(96, Dtype::F32, 96), 772);
        assert!(payload_bytes(128, Dtype::U8, 96) <= 4096);
        assert!(payload_bytes(96, Dtype::F32, 96) <= 4096);
    }

    #[test]
    fn record_offsets() {
        let meta = DiskIndexMeta {
            sector_size: 4096,
            count: 10,
            dim: 4,
            dtype: Dtype::U8,
            max_degree: 4,
            medoid: 0,
        };
        assert_eq!(meta.record_offset(0), 4096);
        assert_eq!(meta.record_offset(3), 4096 * 4);
    }

    #[test]
    fn write_then_read_roundtrips_every_record() {
        let mut rng = Rng64::new(20);
        let n = 120;
        let data: Vec<u8> = (0..n * 6).map(|_| rng.below(256) as u8).collect();
        let ds = VectorDataset::from_u8(n, 6, data).unwrap();
        let g = crate::graph::build_vamana(&ds, &BuildParams::new(6, 12, 1.2, 3).unwrap()).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.bin");
        write_disk_index(&g, &ds, 4096, &p).unwrap();

        let meta = read_meta(&p).unwrap();
        assert_eq!(meta.count, n as u64);
        assert_eq!(meta.medoid, g.medoid);
        assert_eq!(meta.max_degree, 6);

        let mut node = 0u32;
        scan_records(&p, |rec| {
            assert_eq!(rec.node, node);
            assert_eq!(rec.vector.as_ref().len(), 6);
            match rec.vector.as_ref() {
                crate::dataset::VectorRef::U8(v) => match ds.row(node) {
                    crate::dataset::VectorRef::U8(orig) => assert_eq!(v, orig),
                    _ => unreachable!(),
                },
                _ => panic!("wrong dtype"),
            }
            assert_eq!(rec.neighbors, g.adjacency[node as usize]);
            node += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(node, n as u32);
    }

    #[test]
    fn f32_roundtrip() {
        let ds = VectorDataset::from_f32(3, 2, vec![0.5, -1.0, 2.0, 3.5, -4.25, 6.0]).unwrap();
        let g = InMemGraph {
            adjacency: vec![vec![1], vec![0, 2], vec![1]],
            medoid: 1,
            max_degree: 2,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.bin");
        write_disk_index(&g, &ds, 256, &p).unwrap();
        let mut seen = Vec::new();
        scan_records(&p, |rec| {
            seen.push(rec.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen[2].vector, Vector::F32(vec![-4.25, 6.0]));
        assert_eq!(seen[1].neighbors, vec![0, 2]);
    }

    #[test]
    fn oversized_payload_rejected() {
        let ds = VectorDataset::from_u8(2, 200, vec![0; 400]).unwrap();
        let g = InMemGraph { adjacency: vec![vec![1], vec![0]], medoid: 0, max_degree: 100 };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.bin");
        // 200 + 4 + 400 = 604 > 512
        assert!(write_disk_index(&g, &ds, 512, &p).is_err());
    }
}
