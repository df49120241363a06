//! Binary network checkpoints.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "PCBN"                               4 bytes
//! version                              = 1
//! conv1_filters, conv2_filters
//! channels, frames, height, width      input geometry
//! num_classes, hidden_width
//! kernel_extent, pool_extent           = 3, 2
//! tensor_count                         = 8
//! per tensor: rank, rank x extent, then numel x f32 (LE)
//! ```
//!
//! Tensors follow [`Network::parameters`] order. Identical parameters always
//! serialize to identical bytes.

use std::io::{Read, Write};

use super::{FilterPair, Geometry, Network, NnError, Result, KERNEL_EXTENT, POOL_EXTENT};
use crate::tensor::{RngStream, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PCBN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| NnError::Checkpoint(format!("value {v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

pub fn write_checkpoint(net: &Network, w: &mut impl Write) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    put(w, CHECKPOINT_VERSION as usize)?;
    let g = net.geometry;
    for v in [
        net.pair.conv1,
        net.pair.conv2,
        g.channels,
        g.frames,
        g.height,
        g.width,
        net.num_classes,
        net.hidden_width(),
        KERNEL_EXTENT,
        POOL_EXTENT,
    ] {
        put(w, v)?;
    }
    let params = net.parameters();
    put(w, params.len())?;
    let mut buf = Vec::new();
    for t in params {
        put(w, t.dims().len())?;
        for &d in t.dims() {
            put(w, d)?;
        }
        buf.clear();
        buf.reserve(t.numel() * 4);
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Network> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = get(r)? as u32;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let pair = FilterPair::new(get(r)?, get(r)?);
    let geometry = Geometry { channels: get(r)?, frames: get(r)?, height: get(r)?, width: get(r)? };
    let num_classes = get(r)?;
    let hidden = get(r)?;
    let (kernel, pool) = (get(r)?, get(r)?);
    if kernel != KERNEL_EXTENT || pool != POOL_EXTENT {
        return Err(NnError::Checkpoint(format!("unsupported kernel {kernel} / pool {pool}")));
    }
    // Build a skeleton with the right shapes, then overwrite every tensor.
    let mut net = Network::init(pair, num_classes, geometry, hidden, &mut RngStream::new(0))?;
    let count = get(r)?;
    if count != 8 {
        return Err(NnError::Checkpoint(format!("expected 8 tensors, found {count}")));
    }
    for p in net.parameters_mut() {
        let rank = get(r)?;
        if rank != p.dims().len() {
            return Err(NnError::Checkpoint(format!("tensor rank {rank}, expected {}", p.dims().len())));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(get(r)?);
        }
        if dims != p.dims() {
            return Err(NnError::Checkpoint(format!("tensor dims {dims:?}, expected {:?}", p.dims())));
        }
        let mut bytes = vec![0u8; p.numel() * 4];
        r.read_exact(&mut bytes)?;
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        *p = Tensor::from_vec(&dims, data)?;
    }
    Ok(net)
}

impl Network {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_checkpoint(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Network> {
        let bytes = std::fs::read(path)?;
        read_checkpoint(&mut bytes.as_slice())
    }
}
