//! Report files: one JSON record per line, deterministic order.

use super::{AdversarialStateRecord, EvalRecord};
use std::io::Write;
use std::path::Path;

fn writer(path: &Path) -> std::io::Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_eval_records(path: &Path, records: &[EvalRecord]) -> std::io::Result<()> {
    let mut out = writer(path)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    out.flush()
}

pub fn write_adversarial_records(
    path: &Path,
    records: &[AdversarialStateRecord],
) -> std::io::Result<()> {
    let mut out = writer(path)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_records_round_trip_as_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let records = vec![EvalRecord {
            state_key: "X.O/.X./... O".into(),
            oracle_value: -1,
            predicted_v: 0.25,
            value_error: 1.5625,
            misalignment: 0.1,
            misalignment_raw: 0.2,
            visit_count: 3,
        }];
        write_eval_records(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: EvalRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(parsed.state_key, records[0].state_key);
        assert_eq!(parsed.oracle_value, -1);
    }
}
