//! Versioned binary checkpoints for encoder parameters.
//!
//! Layout: magic, format version, origin timestamp, the three layer shapes,
//! six parameter blocks as row-major little-endian f64, a fingerprint of the
//! optimizer moments, and a trailing content hash so corruption is detected
//! before any state is handed back.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::optim::AdamState;

const MAGIC: &[u8; 4] = b"DGCP";
const VERSION: u32 = 1;

/// Digest of the Adam moment buffers, stored beside the parameters so a
/// resumed run can be audited against the state it claims to continue.
pub fn adam_fingerprint(state: &AdamState) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(state.step_count.to_le_bytes());
    for block in state.moment_blocks() {
        for value in block {
            hasher.update(value.to_le_bytes());
        }
    }
    hasher.finalize().into()
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &EncoderParams,
    adam: Option<&AdamState>,
) -> Result<()> {
    let path = path.as_ref();
    let mut payload = Vec::new();
    payload.write_all(MAGIC)?;
    payload.write_u32::<LittleEndian>(VERSION)?;
    payload.write_u64::<LittleEndian>(params.timestamp_of_origin as u64)?;
    payload.write_u64::<LittleEndian>(params.input_dim() as u64)?;
    payload.write_u64::<LittleEndian>(params.hidden_size() as u64)?;
    payload.write_u64::<LittleEndian>(params.embed_size() as u64)?;
    for block in params.blocks() {
        for value in block {
            payload.write_f64::<LittleEndian>(*value)?;
        }
    }
    let fingerprint = adam.map(adam_fingerprint).unwrap_or([0u8; 32]);
    payload.write_all(&fingerprint)?;
    let digest: [u8; 32] = Sha256::digest(&payload).into();
    payload.write_all(&digest)?;

    // write-then-rename keeps interrupted saves from leaving a torn file
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &payload)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(EncoderParams, [u8; 32])> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let corrupt = |msg: &str| Error::Corrupt {
        path: path.display().to_string(),
        msg: msg.to_string(),
    };
    if bytes.len() < 32 {
        return Err(corrupt("file shorter than its checksum"));
    }
    let (payload, stored_digest) = bytes.split_at(bytes.len() - 32);
    let digest: [u8; 32] = Sha256::digest(payload).into();
    if digest != stored_digest {
        return Err(corrupt("checksum mismatch"));
    }

    let mut cursor = Cursor::new(payload);
    let mut magic = [0u8; 4];
    cursor.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = cursor.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            actual: version,
        });
    }
    let timestamp = cursor.read_u64::<LittleEndian>()? as usize;
    let input_dim = cursor.read_u64::<LittleEndian>()? as usize;
    let hidden = cursor.read_u64::<LittleEndian>()? as usize;
    let embed = cursor.read_u64::<LittleEndian>()? as usize;

    let mut read_block = |len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(cursor.read_f64::<LittleEndian>()?);
        }
        Ok(out)
    };
    let w_hidden = Array2::from_shape_vec((input_dim, hidden), read_block(input_dim * hidden)?)
        .map_err(|_| corrupt("hidden weight shape"))?;
    let b_hidden = Array1::from(read_block(hidden)?);
    let w_mu = Array2::from_shape_vec((hidden, embed), read_block(hidden * embed)?)
        .map_err(|_| corrupt("mu head shape"))?;
    let b_mu = Array1::from(read_block(embed)?);
    let w_var = Array2::from_shape_vec((hidden, embed), read_block(hidden * embed)?)
        .map_err(|_| corrupt("var head shape"))?;
    let b_var = Array1::from(read_block(embed)?);
    let mut fingerprint = [0u8; 32];
    cursor.read_exact(&mut fingerprint)?;

    let params = EncoderParams {
        w_hidden,
        b_hidden,
        w_mu,
        b_mu,
        w_var,
        b_var,
        timestamp_of_origin: timestamp,
    };
    Ok((params, fingerprint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_params;
    use tempfile::tempdir;

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempdir().unwrap();
        let mut params = init_params(7, 5, 3, 1);
        params.timestamp_of_origin = 4;
        let state = AdamState::new(&params, 1e-3);
        let first = dir.path().join("a.ckpt");
        let second = dir.path().join("b.ckpt");
        save_checkpoint(&first, &params, Some(&state)).unwrap();
        let (loaded, fp) = load_checkpoint(&first).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(fp, adam_fingerprint(&state));
        save_checkpoint(&second, &loaded, Some(&state)).unwrap();
        assert_eq!(fs::read(first).unwrap(), fs::read(second).unwrap());
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.ckpt");
        let params = init_params(3, 2, 2, 2);
        save_checkpoint(&path, &params, None).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9; // bump version field
                      // fix up trailing digest so only the version differs
        let len = bytes.len();
        let digest: [u8; 32] = Sha256::digest(&bytes[..len - 32]).into();
        bytes[len - 32..].copy_from_slice(&digest);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::VersionMismatch {
                expected: 1,
                actual: 9
            })
        ));
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        let params = init_params(3, 2, 2, 3);
        save_checkpoint(&path, &params, None).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Corrupt { .. })));
    }
}
