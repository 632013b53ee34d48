//! `IQS1` checkpoints, all integers and floats little-endian:
//!
//! ```text
//! b"IQS1"  u32 version
//! u32 in_channels, latent_dim, res_blocks, hidden_width, hidden_layers
//! u64 epoch  u64 optimizer step  u64 parameter count
//! f64 x count                    parameters in layer order
//! u8 has_moments, then f64 x count first moments and f64 x count second moments
//! ```

use std::fs;
use std::path::Path;

use super::model::{ArchConfig, Network};
use super::train::{Adam, NetworkState};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IQS1";
pub const VERSION: u32 = 1;

pub fn encode(state: &NetworkState) -> Vec<u8> {
    let a = state.network.arch();
    let params = state.network.params();
    let mut out = Vec::with_capacity(64 + params.len() * 24);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [a.in_channels, a.latent_dim, a.res_blocks, a.hidden_width, a.hidden_layers] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(state.epoch as u64).to_le_bytes());
    out.extend_from_slice(&state.optimizer.step.to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    let floats = |out: &mut Vec<u8>, xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    floats(&mut out, params);
    out.push(1);
    floats(&mut out, &state.optimizer.m);
    floats(&mut out, &state.optimizer.v);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("parameter count overflows".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

/// Decodes a checkpoint; with `expected` set, the stored architecture must match it.
pub fn decode(bytes: &[u8], expected: Option<&ArchConfig>) -> Result<NetworkState> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not an IQS1 checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported IQS1 version {version}")));
    }
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let arch = ArchConfig {
        in_channels: dims[0],
        latent_dim: dims[1],
        res_blocks: dims[2],
        hidden_width: dims[3],
        hidden_layers: dims[4],
    };
    if let Some(e) = expected {
        if e != &arch {
            return Err(Error::ShapeMismatch(format!("checkpoint architecture {arch:?} differs from {e:?}")));
        }
    }
    let epoch = r.u64()? as usize;
    let step = r.u64()?;
    let count = r.u64()? as usize;
    let mut network = Network::zeroed(arch).map_err(|e| Error::Format(format!("bad architecture block: {e}")))?;
    if count != network.param_count() {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint holds {count} parameters, architecture needs {}",
            network.param_count()
        )));
    }
    network.params_mut().copy_from_slice(&r.floats(count)?);
    let optimizer = match r.take(1)?[0] {
        0 => Adam { step, ..Adam::new(count) },
        1 => Adam { m: r.floats(count)?, v: r.floats(count)?, step },
        f => return Err(Error::Format(format!("bad moment flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(NetworkState { network, optimizer, epoch })
}

pub fn save(path: impl AsRef<Path>, state: &NetworkState) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(state)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>, expected: Option<&ArchConfig>) -> Result<NetworkState> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?, expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> NetworkState {
        let mut s = NetworkState::new(Network::new(ArchConfig::mini(), 4).unwrap());
        s.optimizer.m.iter_mut().enumerate().for_each(|(i, m)| *m = i as f64 * 1e-3);
        s.optimizer.step = 17;
        s.epoch = 3;
        s
    }

    #[test]
    fn round_trip_is_exact() {
        let s = state();
        assert_eq!(decode(&encode(&s), Some(&ArchConfig::mini())).unwrap(), s);
    }

    #[test]
    fn rejects_magic_version_and_shape() {
        let bytes = encode(&state());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad, None), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad, None), Err(Error::Format(_))));
        let wider = ArchConfig { latent_dim: 5, ..ArchConfig::mini() };
        assert!(matches!(decode(&bytes, Some(&wider)), Err(Error::ShapeMismatch(_))));
        let mut bad = bytes.clone();
        bad[12] = 5;
        assert!(decode(&bad, None).is_err());
        assert!(decode(&bytes[..bytes.len() - 1], None).is_err());
    }
}
