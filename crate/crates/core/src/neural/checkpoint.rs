//! Binary checkpoint format: magic `VVIS`, a `u32` format version, the
//! config as a length-prefixed JSON block, then every tensor's raw
//! little-endian `f32` values in declared order. Round trips are exact
//! at the bit level.

use super::{NetConfig, NetworkParams, NeuralError};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"VVIS";
const VERSION: u32 = 1;

pub fn save(params: &NetworkParams, path: &Path) -> Result<(), NeuralError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let config = serde_json::to_vec(&params.config)
        .map_err(|e| NeuralError::CorruptCheckpoint(format!("config serialization: {e}")))?;
    out.write_all(&(config.len() as u32).to_le_bytes())?;
    out.write_all(&config)?;
    for (_, tensor) in params.tensors() {
        for v in tensor {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<NetworkParams, NeuralError> {
    let corrupt = |msg: String| NeuralError::CorruptCheckpoint(msg);
    let mut input = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|_| corrupt("truncated magic".into()))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word).map_err(|_| corrupt("truncated version".into()))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(NeuralError::VersionMismatch { found: version, expected: VERSION });
    }
    input.read_exact(&mut word).map_err(|_| corrupt("truncated config length".into()))?;
    let config_len = u32::from_le_bytes(word) as usize;
    if config_len > 1 << 20 {
        return Err(corrupt("implausible config length".into()));
    }
    let mut config_bytes = vec![0u8; config_len];
    input.read_exact(&mut config_bytes).map_err(|_| corrupt("truncated config".into()))?;
    let config: NetConfig = serde_json::from_slice(&config_bytes)
        .map_err(|e| corrupt(format!("config block: {e}")))?;
    config.validate()?;

    let mut params = NetworkParams::zeros(config);
    for (name, tensor) in params.tensors_mut() {
        let mut bytes = vec![0u8; tensor.len() * 4];
        input
            .read_exact(&mut bytes)
            .map_err(|_| corrupt(format!("truncated tensor {name}")))?;
        for (v, chunk) in tensor.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        }
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(corrupt("trailing bytes after final tensor".into()));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameId;
    use crate::neural::init;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.vvis");
        let params = init(&NetConfig::for_game(GameId::Ttt4, 9)).unwrap();
        save(&params, &path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded, params);
    }

    #[test]
    fn version_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.vvis");
        let params = init(&NetConfig::for_game(GameId::Ttt3, 9)).unwrap();
        save(&params, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99; // version word
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load(&path),
            Err(NeuralError::VersionMismatch { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn truncated_and_oversized_files_are_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.vvis");
        let params = init(&NetConfig::for_game(GameId::Ttt3, 9)).unwrap();
        save(&params, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load(&path), Err(NeuralError::CorruptCheckpoint(_))));

        let mut extended = bytes.clone();
        extended.push(0);
        std::fs::write(&path, &extended).unwrap();
        assert!(matches!(load(&path), Err(NeuralError::CorruptCheckpoint(_))));

        let mut bad_magic = bytes;
        bad_magic[0] = b'x';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(load(&path), Err(NeuralError::CorruptCheckpoint(_))));
    }
}
