//! Dense row-major `f64` tensors and the handful of primitives the layers
//! are written against.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Magic prefix of the binary tensor container.
pub const MAGIC: &[u8; 4] = b"WSNT";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Max,
}

impl BinaryOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Max => a.max(b),
        }
    }
}

/// Right-hand operand of [`Tensor::ew`].
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Scalar(f64),
    Tensor(&'a Tensor),
}

impl From<f64> for Operand<'_> {
    fn from(v: f64) -> Self {
        Operand::Scalar(v)
    }
}

impl<'a> From<&'a Tensor> for Operand<'a> {
    fn from(t: &'a Tensor) -> Self {
        Operand::Tensor(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Max,
    Mean,
    Sum,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Value(format!("zero extent in shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape("new", &shape, &[data.len()]));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// A 1-D tensor; panics on an empty slice.
    pub fn vector(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "empty vector");
        Self {
            shape: vec![values.len()],
            data: values.to_vec(),
        }
    }

    /// A 2-D tensor from equal-length rows; panics on ragged or empty input.
    pub fn matrix<const N: usize>(rows: &[[f64; N]]) -> Self {
        assert!(!rows.is_empty() && N > 0, "empty matrix");
        Self {
            shape: vec![rows.len(), N],
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {i} out of bounds for extent {d}");
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() || shape.contains(&0) {
            return Err(Error::shape("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Validity check: errors if any element is NaN or infinite.
    pub fn check_finite(self, op: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite { op })
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Euclidean norm of the flattened data.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || rhs.rank() != 2 || self.shape[1] != rhs.shape[0] {
            return Err(Error::shape("matmul", &self.shape, &rhs.shape));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], rhs.shape[1]);
        let mut out = vec![0.0; m * n];
        gemm_nn(&self.data, &rhs.data, &mut out, m, k, n);
        Tensor::new(vec![m, n], out)?.check_finite("matmul")
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn matmul_tn(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || rhs.rank() != 2 || self.shape[0] != rhs.shape[0] {
            return Err(Error::shape("matmul_tn", &self.shape, &rhs.shape));
        }
        let (k, m, n) = (self.shape[0], self.shape[1], rhs.shape[1]);
        let mut out = vec![0.0; m * n];
        gemm_tn(&self.data, &rhs.data, &mut out, k, m, n);
        Tensor::new(vec![m, n], out)
    }

    /// `self · rhsᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || rhs.rank() != 2 || self.shape[1] != rhs.shape[1] {
            return Err(Error::shape("matmul_nt", &self.shape, &rhs.shape));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], rhs.shape[0]);
        let mut out = vec![0.0; m * n];
        gemm_nt(&self.data, &rhs.data, &mut out, m, k, n);
        Tensor::new(vec![m, n], out)
    }

    /// Elementwise binary op. `rhs` may be a scalar, a same-shape tensor, or a
    /// tensor broadcastable to `self` (right-aligned; missing leading extents
    /// and length-1 extents replicate).
    pub fn ew<'a>(&self, op: BinaryOp, rhs: impl Into<Operand<'a>>) -> Result<Tensor> {
        let data = match rhs.into() {
            Operand::Scalar(b) => self.data.iter().map(|&a| op.apply(a, b)).collect(),
            Operand::Tensor(b) if b.shape == self.shape => self
                .data
                .iter()
                .zip(&b.data)
                .map(|(&x, &y)| op.apply(x, y))
                .collect(),
            Operand::Tensor(b) => {
                let strides = broadcast_strides(&self.shape, &b.shape)
                    .ok_or_else(|| Error::shape("ew", &self.shape, &b.shape))?;
                let mut out = Vec::with_capacity(self.data.len());
                let mut idx = vec![0usize; self.rank()];
                for &a in &self.data {
                    let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                    out.push(op.apply(a, b.data[off]));
                    for ax in (0..idx.len()).rev() {
                        idx[ax] += 1;
                        if idx[ax] < self.shape[ax] {
                            break;
                        }
                        idx[ax] = 0;
                    }
                }
                out
            }
        };
        Tensor {
            shape: self.shape.clone(),
            data,
        }
        .check_finite("ew")
    }

    pub fn add<'a>(&self, rhs: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.ew(BinaryOp::Add, rhs)
    }

    pub fn sub<'a>(&self, rhs: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.ew(BinaryOp::Sub, rhs)
    }

    pub fn mul<'a>(&self, rhs: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.ew(BinaryOp::Mul, rhs)
    }

    pub fn div<'a>(&self, rhs: impl Into<Operand<'a>>) -> Result<Tensor> {
        self.ew(BinaryOp::Div, rhs)
    }

    /// Reduce along `axis`, removing it. A rank-1 input yields a rank-1
    /// tensor of length 1.
    pub fn reduce(&self, kind: Reduce, axis: usize) -> Result<Tensor> {
        if axis >= self.rank() {
            return Err(Error::Axis {
                axis,
                rank: self.rank(),
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let len = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for i in 0..inner {
                let lane = (0..len).map(|a| self.data[(o * len + a) * inner + i]);
                out.push(match kind {
                    Reduce::Max => lane.fold(f64::NEG_INFINITY, f64::max),
                    Reduce::Sum => lane.sum(),
                    Reduce::Mean => lane.sum::<f64>() / len as f64,
                });
            }
        }
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Tensor::new(shape, out)?.check_finite("reduce")
    }

    /// Serialize: magic, rank, extents (u64 LE), then the payload (f64 LE).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * (self.rank() + self.len()));
        self.write_bytes(&mut out);
        out
    }

    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rank() as u64).to_le_bytes());
        for &d in &self.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    /// Parse one tensor from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn read_bytes(bytes: &[u8]) -> Result<(Tensor, usize)> {
        let mut cursor = Cursor { bytes, pos: 0 };
        if cursor.take(4)? != MAGIC {
            return Err(Error::Format("bad tensor magic".into()));
        }
        let rank = cursor.u64()? as usize;
        if rank == 0 || rank > 16 {
            return Err(Error::Format(format!("unsupported rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cursor.u64()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("extent overflow".into()))?;
        if n.checked_mul(8).is_none_or(|b| b > bytes.len()) {
            return Err(Error::Format("truncated payload".into()));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(cursor.take(8)?.try_into().unwrap()));
        }
        let t = Tensor::new(shape, data).map_err(|e| Error::Format(format!("{e}")))?;
        Ok((t, cursor.pos))
    }

    /// Parse a buffer holding exactly one tensor.
    pub fn from_bytes(bytes: &[u8]) -> Result<Tensor> {
        let (t, used) = Self::read_bytes(bytes)?;
        if used != bytes.len() {
            return Err(Error::Format("trailing bytes after tensor".into()));
        }
        Ok(t)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of tensor data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Strides into `b` for iterating over `a`'s shape, or `None` when `b` does
/// not broadcast to `a`.
fn broadcast_strides(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    if b.len() > a.len() {
        return None;
    }
    let lead = a.len() - b.len();
    let mut strides = vec![0; a.len()];
    let mut stride = 1;
    for ax in (0..b.len()).rev() {
        let (da, db) = (a[lead + ax], b[ax]);
        if db == da {
            strides[lead + ax] = stride;
        } else if db != 1 {
            return None;
        }
        stride *= db;
    }
    Some(strides)
}

/// `out += a[m×k] · b[k×n]`
pub(crate) fn gemm_nn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a[k×m]ᵀ · b[k×n]`
pub(crate) fn gemm_tn(a: &[f64], b: &[f64], out: &mut [f64], k: usize, m: usize, n: usize) {
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for (i, &av) in a[p * m..(p + 1) * m].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (o, &bv) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a[m×k] · b[n×k]ᵀ`
pub(crate) fn gemm_nt(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let dot: f64 = arow.iter().zip(&b[j * k..(j + 1) * k]).map(|(x, y)| x * y).sum();
            out[i * n + j] += dot;
        }
    }
}
