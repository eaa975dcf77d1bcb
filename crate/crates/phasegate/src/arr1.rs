//! ARR1 array files.
//!
//! Layout: the four bytes `ARR1`, a newline-terminated UTF-8 JSON header
//! `{"dtype":..,"shape":[..],"order":"row-major"}`, then the raw payload in
//! little-endian order. `dtype` is `f64` (8 bytes), `c128` (16 bytes,
//! interleaved real and imaginary `f64`) or `u8` (1 byte). The payload holds
//! exactly `product(shape)` elements; trailing bytes are an error.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::Mask;
use crate::numerics::Grid2C;

pub const MAGIC: &[u8; 4] = b"ARR1";
const MAX_HEADER: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Arr1Data {
    F64(Vec<f64>),
    C128(Vec<Complex64>),
    U8(Vec<u8>),
}

impl Arr1Data {
    pub fn dtype(&self) -> &'static str {
        match self {
            Self::F64(_) => "f64",
            Self::C128(_) => "c128",
            Self::U8(_) => "u8",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::F64(v) => v.len(),
            Self::C128(v) => v.len(),
            Self::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
    order: String,
}

/// Shaped array as stored in an ARR1 file.
#[derive(Clone, Debug, PartialEq)]
pub struct Arr1 {
    shape: Vec<usize>,
    data: Arr1Data,
}

fn element_count(shape: &[usize]) -> Result<usize> {
    shape.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::Format(format!("shape {shape:?} overflows")))
    })
}

impl Arr1 {
    pub fn new(shape: Vec<usize>, data: Arr1Data) -> Result<Self> {
        let n = element_count(&shape)?;
        if n != data.len() {
            return Err(Error::Format(format!(
                "shape {shape:?} needs {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &Arr1Data {
        &self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            dtype: self.data.dtype().to_string(),
            shape: self.shape.clone(),
            order: "row-major".to_string(),
        };
        let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(json.as_bytes())?;
        w.write_all(b"\n")?;
        match &self.data {
            Arr1Data::F64(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Arr1Data::C128(v) => {
                for z in v {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
            Arr1Data::U8(v) => w.write_all(v)?,
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("file shorter than the magic bytes".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, expected ARR1".into()));
        }
        let mut line = Vec::new();
        (&mut r).take(MAX_HEADER).read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("header is not newline-terminated".into()));
        }
        line.pop();
        let header: Header =
            serde_json::from_slice(&line).map_err(|e| Error::Format(format!("header: {e}")))?;
        if header.order != "row-major" {
            return Err(Error::Format(format!(
                "unsupported order '{}'",
                header.order
            )));
        }
        let n = element_count(&header.shape)?;
        let width = match header.dtype.as_str() {
            "f64" => 8,
            "c128" => 16,
            "u8" => 1,
            other => return Err(Error::Format(format!("unknown dtype '{other}'"))),
        };
        let bytes = n
            .checked_mul(width)
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let mut payload = Vec::new();
        (&mut r).take(bytes as u64 + 1).read_to_end(&mut payload)?;
        if payload.len() != bytes {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {bytes}",
                payload.len()
            )));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let data = match width {
            8 => Arr1Data::F64(payload.chunks_exact(8).map(f).collect()),
            16 => Arr1Data::C128(
                payload
                    .chunks_exact(16)
                    .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
                    .collect(),
            ),
            _ => Arr1Data::U8(payload),
        };
        Self::new(header.shape, data)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn from_grid(g: &Grid2C) -> Self {
        Self {
            shape: vec![g.rows(), g.cols()],
            data: Arr1Data::C128(g.as_slice().to_vec()),
        }
    }

    /// Stacks equally shaped grids into a `[n, rows, cols]` array.
    pub fn from_grids(gs: &[Grid2C]) -> Result<Self> {
        let first = gs
            .first()
            .ok_or_else(|| Error::Format("cannot stack zero grids".into()))?;
        let mut data = Vec::with_capacity(gs.len() * first.len());
        for g in gs {
            first.ensure_same_shape(g)?;
            data.extend_from_slice(g.as_slice());
        }
        Self::new(
            vec![gs.len(), first.rows(), first.cols()],
            Arr1Data::C128(data),
        )
    }

    pub fn from_mask(m: &Mask) -> Self {
        let (r, c) = m.shape();
        Self {
            shape: vec![r, c],
            data: Arr1Data::U8(m.kept().iter().map(|&k| k as u8).collect()),
        }
    }

    /// Splits a 2D or 3D array of any dtype into complex grids.
    pub fn to_grids(&self) -> Result<Vec<Grid2C>> {
        let (n, rows, cols) = match self.shape.as_slice() {
            [r, c] => (1, *r, *c),
            [n, r, c] => (*n, *r, *c),
            s => {
                return Err(Error::Format(format!(
                    "expected 2 or 3 dimensions, got {s:?}"
                )))
            }
        };
        let values: Vec<Complex64> = match &self.data {
            Arr1Data::F64(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Arr1Data::C128(v) => v.clone(),
            Arr1Data::U8(v) => v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect(),
        };
        let per = rows * cols;
        (0..n)
            .map(|i| Grid2C::from_vec(rows, cols, values[i * per..(i + 1) * per].to_vec()))
            .collect()
    }

    pub fn to_grid(&self) -> Result<Grid2C> {
        let mut gs = self.to_grids()?;
        if gs.len() != 1 {
            return Err(Error::Format(format!(
                "expected one 2D array, found {}",
                gs.len()
            )));
        }
        Ok(gs.remove(0))
    }

    /// Reads a 2D array as a mask: nonzero entries are kept.
    pub fn to_mask(&self) -> Result<Mask> {
        let [r, c] = self.shape.as_slice() else {
            return Err(Error::Format(format!(
                "mask must be 2D, got {:?}",
                self.shape
            )));
        };
        let kept = match &self.data {
            Arr1Data::U8(v) => v.iter().map(|&x| x != 0).collect(),
            Arr1Data::F64(v) => v.iter().map(|&x| x != 0.0).collect(),
            Arr1Data::C128(v) => v.iter().map(|z| z.norm_sqr() != 0.0).collect(),
        };
        Mask::from_vec(*r, *c, kept)
    }
}
