//! Agent checkpoint, little-endian throughout:
//!
//! | field           | type                                  |
//! |-----------------|---------------------------------------|
//! | magic           | `b"XPPO"`                             |
//! | version         | u32                                   |
//! | slices K        | u32                                   |
//! | shared encoder  | u8 (1 shared, 0 separate)             |
//! | encoder         | GCN parameter block                   |
//! | critic encoder  | GCN parameter block, only if separate |
//! | actor, critic   | MLP block each                        |
//! | pre-sigma       | K x f64                               |
//! | checksum        | u64 FNV-1a over the parameter values  |
//!
//! An MLP block is `layers: u32`, `sizes: (layers + 1) x u32`, then for
//! each layer its weights row-major followed by its biases, as f64.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use xslice_gcn::{read_params, write_params};

use crate::error::PpoError;
use crate::mlp::{Dense, Mlp};
use crate::policy::PolicyParams;
use crate::snapshot::fnv_f64;

pub const PPO_MAGIC: [u8; 4] = *b"XPPO";
pub const PPO_VERSION: u32 = 1;

fn write_mlp<W: Write>(w: &mut W, m: &Mlp) -> std::io::Result<()> {
    let sizes = m.sizes();
    w.write_all(&(m.layers.len() as u32).to_le_bytes())?;
    for s in sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    for d in &m.layers {
        for v in d.w.iter().chain(d.b.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, PpoError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, PpoError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp, PpoError> {
    let layers = read_u32(r)? as usize;
    if layers == 0 || layers > 64 {
        return Err(PpoError::Checkpoint(format!(
            "implausible MLP depth {layers}"
        )));
    }
    let sizes = (0..=layers)
        .map(|_| read_u32(r).map(|s| s as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.iter().any(|&s| s == 0 || s > 4096) {
        return Err(PpoError::Checkpoint(format!(
            "implausible MLP sizes {sizes:?}"
        )));
    }
    let mut out = Vec::with_capacity(layers);
    for s in sizes.windows(2) {
        let mut w = Array2::zeros((s[0], s[1]));
        for v in w.iter_mut() {
            *v = read_f64(r)?;
        }
        let mut b = Array1::zeros(s[1]);
        for v in b.iter_mut() {
            *v = read_f64(r)?;
        }
        out.push(Dense { w, b });
    }
    Ok(Mlp { layers: out })
}

pub fn write_checkpoint<W: Write>(mut w: W, params: &PolicyParams) -> Result<(), PpoError> {
    w.write_all(&PPO_MAGIC)?;
    w.write_all(&PPO_VERSION.to_le_bytes())?;
    w.write_all(&(params.slices() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(params.critic_encoder.is_none())])?;
    write_params(&mut w, &params.encoder)?;
    if let Some(e) = &params.critic_encoder {
        write_params(&mut w, e)?;
    }
    write_mlp(&mut w, &params.actor)?;
    write_mlp(&mut w, &params.critic)?;
    for v in &params.pre_sigma {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&fnv_f64(params.flatten()).to_le_bytes())?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<PolicyParams, PpoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != PPO_MAGIC {
        return Err(PpoError::Checkpoint("not an agent checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != PPO_VERSION {
        return Err(PpoError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let k = read_u32(&mut r)? as usize;
    let mut shared = [0u8; 1];
    r.read_exact(&mut shared)?;
    let encoder = read_params(&mut r)?;
    let critic_encoder = if shared[0] == 1 {
        None
    } else {
        Some(read_params(&mut r)?)
    };
    let actor = read_mlp(&mut r)?;
    let critic = read_mlp(&mut r)?;
    let pre_sigma = (0..k)
        .map(|_| read_f64(&mut r))
        .collect::<Result<Vec<_>, _>>()?;
    let params = PolicyParams {
        encoder,
        critic_encoder,
        actor,
        critic,
        pre_sigma,
    };
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    if u64::from_le_bytes(b) != fnv_f64(params.flatten()) {
        return Err(PpoError::Checkpoint("checksum mismatch".into()));
    }
    let out_width = params.encoder.output_width();
    if params.actor.sizes()[0] != k * out_width || params.actor.sizes().last() != Some(&k) {
        return Err(PpoError::Checkpoint(
            "actor shape does not match the slice count".into(),
        ));
    }
    Ok(params)
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &PolicyParams) -> Result<(), PpoError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PolicyParams, PpoError> {
    read_checkpoint(std::fs::read(path)?.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyConfig;

    #[test]
    fn roundtrip_shared_and_separate() {
        for shared in [true, false] {
            let cfg = PolicyConfig {
                shared_encoder: shared,
                ..PolicyConfig::new(3, 7)
            };
            let p = PolicyParams::new(&cfg);
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &p).unwrap();
            assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), p);
        }
    }

    #[test]
    fn rejects_corruption() {
        let p = PolicyParams::new(&PolicyConfig::new(2, 1));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p).unwrap();
        let last = buf.len() - 20;
        buf[last] ^= 0x40;
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
