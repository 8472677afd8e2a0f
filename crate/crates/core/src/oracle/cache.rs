//! Optional on-disk memo cache. A versioned binary file of
//! (state-key, value, plies) records; loading a cache only pre-warms the
//! transposition table and can never change solve results.

use super::{OracleError, Solver};
use crate::game::{parse_state, GameId};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"VVMC";
const VERSION: u32 = 1;

/// Write the solver's proven facts to `path`.
pub fn save_cache(solver: &Solver, game: GameId, path: &Path) -> std::io::Result<()> {
    // Sort for deterministic bytes.
    let mut records: Vec<(String, i8, u16)> = solver
        .memo
        .iter()
        .filter(|(s, _)| s.game() == game)
        .map(|(s, &(v, p))| (s.key(), v, p))
        .collect();
    records.sort();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    for (key, value, plies) in records {
        out.write_all(&(key.len() as u32).to_le_bytes())?;
        out.write_all(key.as_bytes())?;
        out.write_all(&[value as u8])?;
        out.write_all(&plies.to_le_bytes())?;
    }
    out.flush()
}

/// Pre-warm `solver` from a cache file written by [`save_cache`].
pub fn load_cache(solver: &mut Solver, game: GameId, path: &Path) -> Result<(), OracleError> {
    let corrupt = |msg: &str| OracleError::CorruptCache(msg.to_string());
    let mut input =
        BufReader::new(File::open(path).map_err(|e| corrupt(&format!("open failed: {e}")))?);
    let mut head = [0u8; 4];
    input.read_exact(&mut head).map_err(|_| corrupt("truncated header"))?;
    if &head != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word).map_err(|_| corrupt("truncated version"))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(corrupt(&format!("unsupported cache version {version}")));
    }
    let mut count_bytes = [0u8; 8];
    input.read_exact(&mut count_bytes).map_err(|_| corrupt("truncated record count"))?;
    let count = u64::from_le_bytes(count_bytes);
    for _ in 0..count {
        input.read_exact(&mut word).map_err(|_| corrupt("truncated key length"))?;
        let len = u32::from_le_bytes(word) as usize;
        if len > 4096 {
            return Err(corrupt("implausible key length"));
        }
        let mut key = vec![0u8; len];
        input.read_exact(&mut key).map_err(|_| corrupt("truncated key"))?;
        let key = String::from_utf8(key).map_err(|_| corrupt("key is not utf-8"))?;
        let mut tail = [0u8; 3];
        input.read_exact(&mut tail).map_err(|_| corrupt("truncated record"))?;
        let value = tail[0] as i8;
        let plies = u16::from_le_bytes([tail[1], tail[2]]);
        if !(-1..=1).contains(&value) {
            return Err(corrupt("value outside {-1,0,+1}"));
        }
        let state = parse_state(game, &key).map_err(|e| corrupt(&format!("bad state key: {e}")))?;
        solver.memo.insert(state, (value, plies));
    }
    Ok(())
}
