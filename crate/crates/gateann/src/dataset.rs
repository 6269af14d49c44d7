//! Vector datasets and their on-disk format.
//!
//! A [`VectorDataset`] is `count` fixed-dimension vectors with 8-bit unsigned
//! or 32-bit float elements, stored row-major. The serialized form is
//! little-endian: magic `GANNVEC1` | u32 dtype (0 = u8, 1 = f32) | u32 dim |
//! u64 count | raw row-major element data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::byteio;
use crate::error::{Error, Result};

/// Index of a vector within a dataset. Valid iff less than the dataset count.
pub type NodeId = u32;

pub const VEC_MAGIC: &[u8; 8] = b"GANNVEC1";

/// Element type of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    U8,
    F32,
}

impl Dtype {
    pub fn elem_bytes(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::F32 => 4,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Dtype::U8 => 0,
            Dtype::F32 => 1,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Dtype::U8),
            1 => Ok(Dtype::F32),
            c => Err(Error::format(format!("unknown dtype code {c}"))),
        }
    }
}

/// An owned vector of either element type.
#[derive(Clone, Debug, PartialEq)]
pub enum Vector {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

impl Vector {
    pub fn len(&self) -> usize {
        match self {
            Vector::U8(v) => v.len(),
            Vector::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Vector::U8(_) => Dtype::U8,
            Vector::F32(_) => Dtype::F32,
        }
    }

    pub fn as_ref(&self) -> VectorRef<'_> {
        match self {
            Vector::U8(v) => VectorRef::U8(v),
            Vector::F32(v) => VectorRef::F32(v),
        }
    }
}

/// A borrowed view of a vector.
#[derive(Clone, Copy, Debug)]
pub enum VectorRef<'a> {
    U8(&'a [u8]),
    F32(&'a [f32]),
}

impl<'a> VectorRef<'a> {
    pub fn len(&self) -> usize {
        match self {
            VectorRef::U8(v) => v.len(),
            VectorRef::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            VectorRef::U8(_) => Dtype::U8,
            VectorRef::F32(_) => Dtype::F32,
        }
    }

    /// Widen into an f32 buffer (u8 values are widened losslessly).
    pub fn widen_into(&self, out: &mut Vec<f32>) {
        out.clear();
        match self {
            VectorRef::U8(v) => out.extend(v.iter().map(|&x| x as f32)),
            VectorRef::F32(v) => out.extend_from_slice(v),
        }
    }

    pub fn to_owned_vector(&self) -> Vector {
        match self {
            VectorRef::U8(v) => Vector::U8(v.to_vec()),
            VectorRef::F32(v) => Vector::F32(v.to_vec()),
        }
    }
}

enum Data {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

/// `count` x `dim` row-major vectors, immutable after construction.
pub struct VectorDataset {
    count: usize,
    dim: usize,
    data: Data,
}

impl VectorDataset {
    pub fn from_u8(count: usize, dim: usize, data: Vec<u8>) -> Result<Self> {
        Self::check_shape(count, dim, data.len())?;
        Ok(VectorDataset { count, dim, data: Data::U8(data) })
    }

    pub fn from_f32(count: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        Self::check_shape(count, dim, data.len())?;
        Ok(VectorDataset { count, dim, data: Data::F32(data) })
    }

    fn check_shape(count: usize, dim: usize, len: usize) -> Result<()> {
        if count == 0 || dim == 0 {
            return Err(Error::param("dataset needs count >= 1 and dim >= 1"));
        }
        if len != count * dim {
            return Err(Error::param(format!(
                "data length {len} != count {count} x dim {dim}"
            )));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dtype(&self) -> Dtype {
        match self.data {
            Data::U8(_) => Dtype::U8,
            Data::F32(_) => Dtype::F32,
        }
    }

    pub fn row(&self, i: NodeId) -> VectorRef<'_> {
        let i = i as usize;
        assert!(i < self.count, "row {i} out of range ({})", self.count);
        let s = i * self.dim;
        match &self.data {
            Data::U8(d) => VectorRef::U8(&d[s..s + self.dim]),
            Data::F32(d) => VectorRef::F32(&d[s..s + self.dim]),
        }
    }

    /// Exact squared L2 distance between row `i` and `q`.
    pub fn dist2(&self, i: NodeId, q: VectorRef<'_>) -> Result<f64> {
        crate::distance::l2_sq(self.row(i), q)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(VEC_MAGIC)?;
        byteio::write_u32(&mut w, self.dtype().code())?;
        byteio::write_u32(&mut w, self.dim as u32)?;
        byteio::write_u64(&mut w, self.count as u64)?;
        match &self.data {
            Data::U8(d) => w.write_all(d)?,
            Data::F32(d) => {
                for &x in d {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        byteio::expect_magic(&mut r, VEC_MAGIC, "vector file")?;
        let dtype = Dtype::from_code(byteio::read_u32(&mut r)?)?;
        let dim = byteio::read_u32(&mut r)? as usize;
        let count = byteio::read_u64(&mut r)? as usize;
        if dim == 0 || count == 0 {
            return Err(Error::format("vector file with zero dim or count"));
        }
        let elems = count
            .checked_mul(dim)
            .ok_or_else(|| Error::format("vector file size overflow"))?;
        match dtype {
            Dtype::U8 => {
                let mut data = vec![0u8; elems];
                r.read_exact(&mut data)?;
                Self::from_u8(count, dim, data)
            }
            Dtype::F32 => {
                let mut raw = vec![0u8; elems * 4];
                r.read_exact(&mut raw)?;
                let data = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                Self::from_f32(count, dim, data)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_invariants() {
        assert!(VectorDataset::from_u8(0, 4, vec![]).is_err());
        assert!(VectorDataset::from_u8(2, 0, vec![]).is_err());
        assert!(VectorDataset::from_u8(2, 3, vec![0; 5]).is_err());
        assert!(VectorDataset::from_u8(2, 3, vec![0; 6]).is_ok());
    }

    #[test]
    fn row_access() {
        let ds = VectorDataset::from_u8(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        match ds.row(1) {
            VectorRef::U8(v) => assert_eq!(v, &[3, 4]),
            _ => panic!("wrong dtype"),
        }
    }

    #[test]
    fn roundtrip_u8_and_f32() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");

        let ds = VectorDataset::from_u8(4, 3, (0u8..12).collect()).unwrap();
        ds.save(&p).unwrap();
        let back = VectorDataset::load(&p).unwrap();
        assert_eq!(back.count(), 4);
        assert_eq!(back.dim(), 3);
        assert_eq!(back.dtype(), Dtype::U8);
        for i in 0..4 {
            assert_eq!(back.dist2(i, ds.row(i)).unwrap(), 0.0);
        }

        let ds = VectorDataset::from_f32(2, 2, vec![0.5, -1.25, 3.0, 4.5]).unwrap();
        ds.save(&p).unwrap();
        let back = VectorDataset::load(&p).unwrap();
        assert_eq!(back.dtype(), Dtype::F32);
        assert_eq!(back.dist2(1, ds.row(1)).unwrap(), 0.0);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.bin");
        std::fs::write(&p, b"NOTMAGIC________").unwrap();
        assert!(matches!(VectorDataset::load(&p), Err(Error::Format(_))));
    }
}
