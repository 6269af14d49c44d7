//! Product quantization.
//!
//! Vectors are split into `m` contiguous chunks; each chunk is quantized to
//! one of 256 centroids, giving an `m`-byte code per vector. Query distances
//! against codes use asymmetric distance computation: a per-query lookup
//! table of partial squared distances ([`QueryLut`]) is built once, then each
//! code costs `m` table lookups ([`adc`]). PQ distances order traversal only;
//! final ranking always uses exact distances from full-precision vectors.
//!
//! File format (little-endian): magic `GANNPQ01` | u32 m | u32 dim |
//! u32 dtype | u32 x m subdims | f32 centroids (m x 256 x subdim) | u64 n |
//! codes (n x m bytes).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::byteio;
use crate::dataset::{Dtype, NodeId, VectorDataset, VectorRef};
use crate::distance::l2_f32_fast;
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::rng::derive_seed;

pub const PQ_MAGIC: &[u8; 8] = b"GANNPQ01";

/// Centroids per chunk; one byte per chunk code.
pub const CENTROIDS_PER_CHUNK: usize = 256;

/// Default number of chunks.
pub const DEFAULT_CHUNKS: usize = 32;
/// Default k-means iterations for training.
pub const DEFAULT_TRAIN_ITERS: usize = 12;
/// Default training sample size.
pub const DEFAULT_TRAIN_SAMPLE: usize = 65_536;

/// Trained per-chunk codebooks.
pub struct PqCodebook {
    m: usize,
    dim: usize,
    dtype: Dtype,
    /// Per-chunk dimensionality; sums to `dim`.
    subdims: Vec<usize>,
    /// Start dimension of each chunk.
    offsets: Vec<usize>,
    /// Flat centroid storage: chunk-major, then centroid, then dimension.
    centroids: Vec<f32>,
    /// Flat offset of each chunk's centroid block.
    chunk_base: Vec<usize>,
    /// Distinct trained centroids per chunk. Less than 256 only when the
    /// dataset had fewer than 256 vectors; the remaining slots are duplicates.
    trained_k: usize,
}

impl PqCodebook {
    pub fn chunks(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn subdims(&self) -> &[usize] {
        &self.subdims
    }

    /// Distinct centroids actually trained per chunk (256 unless the dataset
    /// was smaller than 256 vectors).
    pub fn trained_centroids(&self) -> usize {
        self.trained_k
    }

    /// Centroid `c` of chunk `m` as a slice of length `subdims[m]`.
    pub fn centroid(&self, chunk: usize, c: usize) -> &[f32] {
        let sd = self.subdims[chunk];
        let start = self.chunk_base[chunk] + c * sd;
        &self.centroids[start..start + sd]
    }

    /// Concatenate the centroids selected by `code` into a reconstructed
    /// vector.
    pub fn reconstruct(&self, code: &[u8]) -> Result<Vec<f32>> {
        if code.len() != self.m {
            return Err(Error::DimMismatch(code.len(), self.m));
        }
        let mut out = Vec::with_capacity(self.dim);
        for (chunk, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.centroid(chunk, c as usize));
        }
        Ok(out)
    }
}

/// Packed PQ codes for a whole dataset: exactly `n x m` bytes.
pub struct PqCodes {
    n: usize,
    m: usize,
    codes: Vec<u8>,
}

impl PqCodes {
    pub fn count(&self) -> usize {
        self.n
    }

    pub fn chunks(&self) -> usize {
        self.m
    }

    pub fn row(&self, id: NodeId) -> &[u8] {
        let i = id as usize * self.m;
        &self.codes[i..i + self.m]
    }

    pub fn byte_len(&self) -> usize {
        self.codes.len()
    }
}

/// Per-query table of partial squared distances, `m x 256` f32 entries.
pub struct QueryLut {
    m: usize,
    table: Vec<f32>,
}

impl QueryLut {
    pub fn chunks(&self) -> usize {
        self.m
    }

    pub fn entry(&self, chunk: usize, c: usize) -> f32 {
        self.table[chunk * CENTROIDS_PER_CHUNK + c]
    }

    /// Unchecked ADC over a code known to have length `m`.
    #[inline]
    pub(crate) fn score(&self, code: &[u8]) -> f32 {
        debug_assert_eq!(code.len(), self.m);
        let mut acc = 0.0f32;
        for (chunk, &c) in code.iter().enumerate() {
            acc += self.table[chunk * CENTROIDS_PER_CHUNK + c as usize];
        }
        acc
    }
}

/// Contiguous equal chunk split; remainder dims go one per chunk from chunk 0.
pub fn chunk_partition(dim: usize, m: usize) -> Vec<usize> {
    let base = dim / m;
    let rem = dim % m;
    (0..m).map(|i| base + usize::from(i < rem)).collect()
}

/// Train per-chunk codebooks with seeded k-means over a uniform sample.
///
/// Deterministic given `(dataset, m, iters, sample, seed)`. If the dataset
/// has fewer than 256 vectors, each chunk trains `k = count` centroids and
/// the remaining slots are filled with duplicates.
pub fn train(dataset: &VectorDataset, m: usize, iters: usize, sample: usize, seed: u64) -> Result<PqCodebook> {
    let dim = dataset.dim();
    let n = dataset.count();
    if dim < m {
        return Err(Error::param(format!("dim {dim} < chunks {m}")));
    }
    if m == 0 {
        return Err(Error::param("chunks must be >= 1"));
    }
    let sample = sample.min(n).max(1);

    let subdims = chunk_partition(dim, m);
    let mut offsets = Vec::with_capacity(m);
    let mut acc = 0;
    for &sd in &subdims {
        offsets.push(acc);
        acc += sd;
    }

    // Seeded uniform sample of training rows.
    let mut rng = crate::rng::Rng64::new(derive_seed(seed, 0xA11CE));
    let rows = rng.sample_indices(n, sample);

    let k = CENTROIDS_PER_CHUNK.min(n);
    let mut widened = Vec::with_capacity(dim);
    let mut centroids = Vec::new();
    let mut chunk_base = Vec::with_capacity(m);

    // Gather the full widened sample once, then slice per chunk.
    let mut sample_mat = vec![0.0f32; rows.len() * dim];
    for (r, &row) in rows.iter().enumerate() {
        dataset.row(row as NodeId).widen_into(&mut widened);
        sample_mat[r * dim..(r + 1) * dim].copy_from_slice(&widened);
    }

    for chunk in 0..m {
        let sd = subdims[chunk];
        let off = offsets[chunk];
        let mut pts = vec![0.0f32; rows.len() * sd];
        for r in 0..rows.len() {
            pts[r * sd..(r + 1) * sd]
                .copy_from_slice(&sample_mat[r * dim + off..r * dim + off + sd]);
        }
        let res = kmeans(&pts, rows.len(), sd, k.min(rows.len()), iters, derive_seed(seed, chunk as u64 + 1));

        chunk_base.push(centroids.len());
        centroids.extend_from_slice(&res.centroids);
        // Duplicate centroid slots up to 256 for small datasets.
        let trained = k.min(rows.len());
        for slot in trained..CENTROIDS_PER_CHUNK {
            let src = slot % trained;
            let start = chunk_base[chunk] + src * sd;
            let dup: Vec<f32> = centroids[start..start + sd].to_vec();
            centroids.extend_from_slice(&dup);
        }
    }

    Ok(PqCodebook {
        m,
        dim,
        dtype: dataset.dtype(),
        subdims,
        offsets,
        centroids,
        chunk_base,
        trained_k: k.min(sample),
    })
}

/// Encode one vector: per chunk, the index of the nearest centroid (ties go
/// to the lowest index).
pub fn encode(codebook: &PqCodebook, v: VectorRef<'_>) -> Result<Vec<u8>> {
    if v.len() != codebook.dim {
        return Err(Error::DimMismatch(v.len(), codebook.dim));
    }
    let mut widened = Vec::with_capacity(codebook.dim);
    v.widen_into(&mut widened);
    let mut code = Vec::with_capacity(codebook.m);
    for chunk in 0..codebook.m {
        let sd = codebook.subdims[chunk];
        let off = codebook.offsets[chunk];
        let sub = &widened[off..off + sd];
        let mut best = 0usize;
        let mut best_d = f32::INFINITY;
        for c in 0..CENTROIDS_PER_CHUNK {
            let d = l2_f32_fast(sub, codebook.centroid(chunk, c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        code.push(best as u8);
    }
    Ok(code)
}

/// Encode every row of a dataset.
pub fn encode_all(codebook: &PqCodebook, dataset: &VectorDataset) -> Result<PqCodes> {
    let n = dataset.count();
    let mut codes = Vec::with_capacity(n * codebook.m);
    for i in 0..n {
        codes.extend_from_slice(&encode(codebook, dataset.row(i as NodeId))?);
    }
    Ok(PqCodes { n, m: codebook.m, codes })
}

/// Build the per-query lookup table: `table[m][c] = l2_sq(q_m, centroid[m][c])`.
pub fn build_lut(codebook: &PqCodebook, q: VectorRef<'_>) -> Result<QueryLut> {
    if q.len() != codebook.dim {
        return Err(Error::DimMismatch(q.len(), codebook.dim));
    }
    let mut widened = Vec::with_capacity(codebook.dim);
    q.widen_into(&mut widened);
    let mut table = vec![0.0f32; codebook.m * CENTROIDS_PER_CHUNK];
    for chunk in 0..codebook.m {
        let sd = codebook.subdims[chunk];
        let off = codebook.offsets[chunk];
        let sub = &widened[off..off + sd];
        for c in 0..CENTROIDS_PER_CHUNK {
            table[chunk * CENTROIDS_PER_CHUNK + c] = l2_f32_fast(sub, codebook.centroid(chunk, c));
        }
    }
    Ok(QueryLut { m: codebook.m, table })
}

/// Asymmetric distance: sum of the table entries selected by `code`.
pub fn adc(lut: &QueryLut, code: &[u8]) -> Result<f32> {
    if code.len() != lut.m {
        return Err(Error::DimMismatch(code.len(), lut.m));
    }
    Ok(lut.score(code))
}

/// Write codebook + codes to one file.
pub fn save(path: &Path, codebook: &PqCodebook, codes: &PqCodes) -> Result<()> {
    if codes.m != codebook.m {
        return Err(Error::Inconsistent("codes and codebook disagree on chunks".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(PQ_MAGIC)?;
    byteio::write_u32(&mut w, codebook.m as u32)?;
    byteio::write_u32(&mut w, codebook.dim as u32)?;
    byteio::write_u32(&mut w, codebook.dtype.code())?;
    for &sd in &codebook.subdims {
        byteio::write_u32(&mut w, sd as u32)?;
    }
    for &x in &codebook.centroids {
        byteio::write_f32(&mut w, x)?;
    }
    byteio::write_u64(&mut w, codes.n as u64)?;
    w.write_all(&codes.codes)?;
    w.flush()?;
    Ok(())
}

/// Load codebook + codes written by [`save`].
pub fn load(path: &Path) -> Result<(PqCodebook, PqCodes)> {
    let mut r = BufReader::new(File::open(path)?);
    byteio::expect_magic(&mut r, PQ_MAGIC, "pq file")?;
    let m = byteio::read_u32(&mut r)? as usize;
    let dim = byteio::read_u32(&mut r)? as usize;
    let dtype = Dtype::from_code(byteio::read_u32(&mut r)?)?;
    if m == 0 || dim < m {
        return Err(Error::format("pq file with invalid chunk layout"));
    }
    let mut subdims = Vec::with_capacity(m);
    for _ in 0..m {
        subdims.push(byteio::read_u32(&mut r)? as usize);
    }
    if subdims.iter().sum::<usize>() != dim || subdims.iter().any(|&s| s == 0) {
        return Err(Error::format("pq subdims do not partition dim"));
    }
    let mut offsets = Vec::with_capacity(m);
    let mut chunk_base = Vec::with_capacity(m);
    let mut acc_dim = 0;
    let mut acc_base = 0;
    for &sd in &subdims {
        offsets.push(acc_dim);
        chunk_base.push(acc_base);
        acc_dim += sd;
        acc_base += sd * CENTROIDS_PER_CHUNK;
    }
    let total = dim * CENTROIDS_PER_CHUNK;
    let mut centroids = Vec::with_capacity(total);
    for _ in 0..total {
        centroids.push(byteio::read_f32(&mut r)?);
    }
    let n = byteio::read_u64(&mut r)? as usize;
    let mut codes = vec![0u8; n * m];
    r.read_exact(&mut codes)?;
    Ok((
        PqCodebook {
            m,
            dim,
            dtype,
            subdims,
            offsets,
            centroids,
            chunk_base,
            trained_k: CENTROIDS_PER_CHUNK,
        },
        PqCodes { n, m, codes },
    ))
}
