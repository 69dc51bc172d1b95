//! ILBC model checkpoints and loss-history CSV.
//!
//! ```text
//! magic "ILBC" | version u16 | head u16 (1 discrete, 0 continuous)
//! n_layers u32 | layer sizes u32[n_layers]            (obs, hidden, out)
//! continuous only: low f64[out] | high f64[out]
//! parameters f64[...] (W1, b1, W2, b2)
//! ```
//! All values little-endian.

use std::fmt::Write as _;
use std::path::Path;

use super::bc::{BcModel, Head};
use crate::{Error, Result};

pub const ILBC_MAGIC: &[u8; 4] = b"ILBC";
pub const ILBC_VERSION: u16 = 1;

pub fn checkpoint_bytes(model: &BcModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ILBC_MAGIC);
    out.extend_from_slice(&ILBC_VERSION.to_le_bytes());
    let head: u16 = matches!(model.head, Head::Discrete) as u16;
    out.extend_from_slice(&head.to_le_bytes());
    out.extend_from_slice(&3u32.to_le_bytes());
    for size in [model.obs_dim, model.hidden, model.out_dim] {
        out.extend_from_slice(&(size as u32).to_le_bytes());
    }
    if let Head::Continuous { low, high } = &model.head {
        low.iter().chain(high).for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    }
    model.params.iter().for_each(|p| out.extend_from_slice(&p.to_le_bytes()));
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<BcModel> {
    let corrupt = |m: &str| Error::CorruptFile(format!("checkpoint: {m}"));
    if bytes.len() < 12 || &bytes[..4] != ILBC_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    if u16_at(4) != ILBC_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let discrete = match u16_at(6) {
        0 => false,
        1 => true,
        _ => return Err(corrupt("unknown head kind")),
    };
    if u32_at(8) != 3 || bytes.len() < 24 {
        return Err(corrupt("expected three layer sizes"));
    }
    let (obs_dim, hidden, out_dim) = (u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize);
    let n_params = BcModel::param_count(obs_dim, hidden, out_dim);
    let n_bounds = if discrete { 0 } else { 2 * out_dim };
    if bytes.len() != 24 + 8 * (n_bounds + n_params) {
        return Err(corrupt("length does not match layer sizes"));
    }
    let floats: Vec<f64> = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let head = if discrete {
        Head::Discrete
    } else {
        Head::Continuous {
            low: floats[..out_dim].to_vec(),
            high: floats[out_dim..2 * out_dim].to_vec(),
        }
    };
    let model = BcModel {
        obs_dim,
        hidden,
        out_dim,
        head,
        params: floats[n_bounds..].to_vec(),
    };
    if !model.is_finite() {
        return Err(corrupt("non-finite parameters"));
    }
    Ok(model)
}

pub fn write_checkpoint(model: &BcModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<BcModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

/// `epoch,loss` with 1-based epochs.
pub fn write_loss_csv(losses: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, l);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn roundtrip_both_heads() {
        let mut rng = RngStream::new(4);
        let d = BcModel::init(2, 5, 4, Head::Discrete, &mut rng);
        assert_eq!(checkpoint_from_bytes(&checkpoint_bytes(&d)).unwrap(), d);
        let c = BcModel::init(
            1,
            3,
            1,
            Head::Continuous {
                low: vec![-0.2],
                high: vec![0.2],
            },
            &mut rng,
        );
        let bytes = checkpoint_bytes(&c);
        assert_eq!(checkpoint_from_bytes(&bytes).unwrap(), c);
        assert!(checkpoint_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(checkpoint_from_bytes(&bad).is_err());
    }
}
