//! Binary parameter format, all integers and floats little-endian:
//!
//! | field    | type          |
//! |----------|---------------|
//! | magic    | `b"XGCN"`     |
//! | version  | u32           |
//! | seed     | u64           |
//! | layers L | u32           |
//! | widths   | (L + 1) x u32 |
//! | weights  | f64, layer by layer, row-major |
//! | checksum | u64 FNV-1a over every preceding byte |

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::GcnError;
use crate::model::GcnParams;

pub const GCN_MAGIC: [u8; 4] = *b"XGCN";
pub const GCN_VERSION: u32 = 1;

struct Hashing<W> {
    inner: W,
    hash: u64,
}

impl<W> Hashing<W> {
    fn new(inner: W) -> Self {
        Self {
            inner,
            hash: 0xcbf2_9ce4_8422_2325,
        }
    }

    fn feed(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.hash ^= u64::from(b);
            self.hash = self.hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.feed(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

impl<R: Read> Read for Hashing<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.feed(&buf[..n]);
        Ok(n)
    }
}

pub fn write_params<W: Write>(out: W, params: &GcnParams) -> Result<(), GcnError> {
    let mut w = Hashing::new(out);
    w.write_all(&GCN_MAGIC)?;
    w.write_all(&GCN_VERSION.to_le_bytes())?;
    w.write_all(&params.seed.to_le_bytes())?;
    w.write_all(&(params.layers() as u32).to_le_bytes())?;
    for &width in &params.widths {
        w.write_all(&(width as u32).to_le_bytes())?;
    }
    for m in &params.weights {
        for v in m.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    let sum = w.hash;
    w.inner.write_all(&sum.to_le_bytes())?;
    Ok(())
}

fn u32_from<R: Read>(r: &mut R) -> Result<u32, GcnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn u64_from<R: Read>(r: &mut R) -> Result<u64, GcnError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_params<R: Read>(input: R) -> Result<GcnParams, GcnError> {
    let mut r = Hashing::new(input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != GCN_MAGIC {
        return Err(GcnError::Checkpoint("not a GCN parameter block".into()));
    }
    let version = u32_from(&mut r)?;
    if version != GCN_VERSION {
        return Err(GcnError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let seed = u64_from(&mut r)?;
    let layers = u32_from(&mut r)? as usize;
    if layers == 0 || layers > 64 {
        return Err(GcnError::Checkpoint(format!(
            "implausible layer count {layers}"
        )));
    }
    let widths = (0..=layers)
        .map(|_| u32_from(&mut r).map(|w| w as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if widths.iter().any(|&w| w == 0 || w > 4096) {
        return Err(GcnError::Checkpoint(format!(
            "implausible widths {widths:?}"
        )));
    }
    let mut weights = Vec::with_capacity(layers);
    for pair in widths.windows(2) {
        let mut m = Array2::zeros((pair[0], pair[1]));
        for v in m.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        weights.push(m);
    }
    let expected = r.hash;
    let stored = u64_from(&mut r.inner)?;
    if stored != expected {
        return Err(GcnError::Checkpoint("checksum mismatch".into()));
    }
    Ok(GcnParams {
        widths,
        weights,
        seed,
    })
}
