//! Binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "LCMP" | u32 version | u64 config-len | config utf-8 (key=value lines)
//! u32 tensor-count
//! per tensor: u32 name-len | name | u32 rank | u64 dims... | f32 data...
//! ```
//!
//! Tensors appear in the fixed [`ModelParams::tensors`] order and are
//! stored as `f32` regardless of the in-memory scalar, so equal parameters
//! always serialize to identical bytes.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::config::{ConfigError, ModelConfig};
use super::params::ModelParams;
use crate::Scalar;

const MAGIC: &[u8; 4] = b"LCMP";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("invalid config block: {0}")]
    BadConfig(#[from] ConfigError),
    #[error("config block is not utf-8")]
    BadConfigEncoding,
    #[error("tensor layout mismatch at `{name}`")]
    TensorMismatch { name: String },
}

/// Writes the config text and all parameters.  `config_text` should start
/// with [`ModelConfig::to_kv_text`]; extra `key=value` lines ride along and
/// come back verbatim from [`load`].
pub fn save<S: Scalar>(
    path: &Path,
    config_text: &str,
    params: &ModelParams<S>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(config_text.len() as u64).to_le_bytes())?;
    w.write_all(config_text.as_bytes())?;
    let tensors = params.tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, view) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        let dims = view.dims();
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in &dims {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in view.iter() {
            w.write_all(&v.to_f32_lossy().to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_exact_buf<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads back the config text and parameters.  The model config is parsed
/// from the config block; tensor names, order, and shapes must match what
/// that config implies.
pub fn load<S: Scalar>(path: &Path) -> Result<(ModelConfig, ModelParams<S>, String), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let cfg_len = read_u64(&mut r)? as usize;
    let config_text = String::from_utf8(read_exact_buf(&mut r, cfg_len)?)
        .map_err(|_| CheckpointError::BadConfigEncoding)?;
    let cfg = ModelConfig::from_kv_text(&config_text)?;

    let mut params = ModelParams::<S>::zeros(&cfg);
    let n_tensors = read_u32(&mut r)? as usize;
    let mut views = params.tensors_mut();
    if n_tensors != views.len() {
        return Err(CheckpointError::TensorMismatch {
            name: format!("expected {} tensors, found {}", views.len(), n_tensors),
        });
    }
    for (expect_name, view) in views.iter_mut() {
        let name_len = read_u32(&mut r)? as usize;
        let name = String::from_utf8(read_exact_buf(&mut r, name_len)?)
            .map_err(|_| CheckpointError::BadConfigEncoding)?;
        if &name != expect_name {
            return Err(CheckpointError::TensorMismatch { name });
        }
        let rank = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u64(&mut r)? as usize);
        }
        if dims != view.dims() {
            return Err(CheckpointError::TensorMismatch { name });
        }
        let count: usize = dims.iter().product();
        let bytes = read_exact_buf(&mut r, count * 4)?;
        let mut it = bytes.chunks_exact(4);
        view.fill_from(|| {
            let chunk = it.next().expect("length checked");
            S::from_f32(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
        });
    }
    Ok((cfg, params, config_text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::config::Arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(arch: Arch) -> ModelConfig {
        let mut cfg = match arch {
            Arch::Transformer => ModelConfig::transformer(9),
            Arch::Gru => ModelConfig::gru(9),
        };
        cfg.d_model = 8;
        cfg.d_embed = 8;
        cfg.d_ff = 16;
        cfg.n_heads = 2;
        cfg.n_layers = 2;
        cfg.gru_hidden = 6;
        cfg
    }

    #[test]
    fn round_trips_both_architectures() {
        let dir = tempfile::tempdir().unwrap();
        for arch in [Arch::Transformer, Arch::Gru] {
            let cfg = tiny(arch);
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let params = ModelParams::<f32>::init(&cfg, &mut rng);
            let text = format!("{}seed=7\n", cfg.to_kv_text());
            let path = dir.path().join(format!("{arch}.lcmp"));
            save(&path, &text, &params).unwrap();
            let (cfg2, params2, text2) = load::<f32>(&path).unwrap();
            assert_eq!(text, text2);
            assert_eq!(cfg.to_kv_text(), cfg2.to_kv_text());
            assert_eq!(params, params2);
        }
    }

    #[test]
    fn identical_parameters_serialize_to_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(Arch::Gru);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        let pa = dir.path().join("a.lcmp");
        let pb = dir.path().join("b.lcmp");
        save(&pa, &cfg.to_kv_text(), &params).unwrap();
        save(&pb, &cfg.to_kv_text(), &params).unwrap();
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }

    #[test]
    fn rejects_foreign_and_truncated_files() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.lcmp");
        std::fs::write(&bad, b"not a checkpoint").unwrap();
        assert!(matches!(load::<f32>(&bad), Err(CheckpointError::BadMagic)));

        let cfg = tiny(Arch::Transformer);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        let full = dir.path().join("full.lcmp");
        save(&full, &cfg.to_kv_text(), &params).unwrap();
        let bytes = std::fs::read(&full).unwrap();
        let cut = dir.path().join("cut.lcmp");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load::<f32>(&cut), Err(CheckpointError::Io(_))));
    }
}
