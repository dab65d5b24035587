//! Binary container for named tensors (network weights and exported feature/SRP data).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "C3DE"
//! version    u32
//! kind       u8       0 = weights, 1 = data
//! res1       u32
//! res2       u32
//! channels   u32
//! depthwise  u8
//! in_filters u32
//! count      u32      number of tensors
//! directory  count × { name_len u16, name utf-8, dtype u8 (1 = f32, 2 = f64), rank u8, dims u32 × rank }
//! payloads   tensors in directory order, IEEE-754 little-endian
//! crc32      u32      over every preceding byte
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"C3DE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileKind {
    Weights,
    Data,
}

/// Configuration echo stored in every file. Data files may leave fields at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FileHeader {
    pub kind: FileKind,
    pub res1: u32,
    pub res2: u32,
    pub channels: u32,
    pub depthwise: bool,
    pub input_filters: u32,
}

impl FileHeader {
    pub fn data(res1: u32, res2: u32) -> Self {
        Self {
            kind: FileKind::Data,
            res1,
            res2,
            channels: 0,
            depthwise: false,
            input_filters: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            Self::F32(v) => v.len(),
            Self::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype(&self) -> u8 {
        match self {
            Self::F32(_) => 1,
            Self::F64(_) => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn f32(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::new(dims, TensorData::F32(data))
    }

    pub fn f64(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, TensorData::F64(data))
    }

    fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "tensor dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::invalid("tensor rank above 255"));
        }
        Ok(Self { dims, data })
    }

    pub fn element_count(&self) -> usize {
        self.data.len()
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            TensorData::F32(v) => Some(v),
            TensorData::F64(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            TensorData::F64(v) => Some(v),
            TensorData::F32(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorFile {
    pub header: FileHeader,
    pub tensors: BTreeMap<String, Tensor>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

impl TensorFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let h = &self.header;
        out.push(match h.kind {
            FileKind::Weights => 0,
            FileKind::Data => 1,
        });
        out.extend_from_slice(&h.res1.to_le_bytes());
        out.extend_from_slice(&h.res2.to_le_bytes());
        out.extend_from_slice(&h.channels.to_le_bytes());
        out.push(u8::from(h.depthwise));
        out.extend_from_slice(&h.input_filters.to_le_bytes());
        put_u32(&mut out, self.tensors.len())?;
        for (name, t) in &self.tensors {
            let len = u16::try_from(name.len())
                .map_err(|_| Error::invalid(format!("tensor name `{name}` too long")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.data.dtype());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                put_u32(&mut out, d)?;
            }
        }
        for t in self.tensors.values() {
            match &t.data {
                TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 4 + 4 || &bytes[..4] != MAGIC {
            return Err(Error::format("missing C3DE magic"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().expect("4-byte trailer"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let kind = match r.u8()? {
            0 => FileKind::Weights,
            1 => FileKind::Data,
            other => return Err(Error::format(format!("unknown file kind {other}"))),
        };
        let header = FileHeader {
            kind,
            res1: r.u32()?,
            res2: r.u32()?,
            channels: r.u32()?,
            depthwise: r.u8()? != 0,
            input_filters: r.u32()?,
        };
        let count = r.u32()? as usize;
        let mut directory = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format("tensor name is not utf-8"))?
                .to_owned();
            let dtype = r.u8()?;
            let rank = r.u8()? as usize;
            let dims = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            directory.push((name, dtype, dims));
        }
        let mut tensors = BTreeMap::new();
        for (name, dtype, dims) in directory {
            let n = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::format(format!("tensor `{name}` is too large")))?;
            let tensor = match dtype {
                1 => {
                    let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::format("size overflow"))?)?;
                    let v = raw
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                        .collect();
                    Tensor::f32(dims, v)?
                }
                2 => {
                    let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::format("size overflow"))?)?;
                    let v = raw
                        .chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                        .collect();
                    Tensor::f64(dims, v)?
                }
                other => return Err(Error::format(format!("tensor `{name}` has unknown dtype {other}"))),
            };
            if tensors.insert(name.clone(), tensor).is_some() {
                return Err(Error::format(format!("tensor `{name}` appears twice")));
            }
        }
        if r.pos != body.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after payloads",
                body.len() - r.pos
            )));
        }
        Ok(Self { header, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::format("unexpected end of file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
