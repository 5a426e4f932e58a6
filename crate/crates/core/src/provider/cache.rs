use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::LogprobRecord;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache line {line_no}: {cause}")]
    MalformedLine { line_no: usize, cause: String },
    #[error("record id {0:?} already present in cache")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a logprob cache, optionally keeping only the ids in `ids`.
///
/// Blank lines are ignored. Every other line must hold one valid record.
pub fn cache_read(
    path: impl AsRef<Path>,
    ids: Option<&HashSet<String>>,
) -> Result<Vec<LogprobRecord>, CacheError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogprobRecord =
            serde_json::from_str(&line).map_err(|e| CacheError::MalformedLine {
                line_no,
                cause: e.to_string(),
            })?;
        record.validate().map_err(|e| CacheError::MalformedLine {
            line_no,
            cause: e.to_string(),
        })?;
        if ids.is_none_or(|ids| ids.contains(&record.id)) {
            records.push(record);
        }
    }
    Ok(records)
}

/// Appends `records` to the cache at `path`, creating it if needed.
///
/// Ids already present in the file (or repeated within `records`) are an
/// error unless `overwrite` is set, in which case the file is rewritten with
/// the older entries for those ids replaced.
pub fn cache_write(
    records: &[LogprobRecord],
    path: impl AsRef<Path>,
    overwrite: bool,
) -> Result<usize, CacheError> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(CacheError::DuplicateId(r.id.clone()));
        }
    }
    let existing = if path.exists() {
        cache_read(path, None)?
    } else {
        Vec::new()
    };
    let clash = existing.iter().find(|r| seen.contains(r.id.as_str()));
    match (clash, overwrite) {
        (Some(r), false) => Err(CacheError::DuplicateId(r.id.clone())),
        (Some(_), true) => {
            let kept = existing.iter().filter(|r| !seen.contains(r.id.as_str()));
            let tmp = path.with_extension("tmp");
            {
                let mut out = BufWriter::new(File::create(&tmp)?);
                for r in kept.chain(records) {
                    write_line(&mut out, r)?;
                }
                out.flush()?;
            }
            fs::rename(&tmp, path)?;
            Ok(records.len())
        }
        (None, _) => {
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut out = BufWriter::new(file);
            for r in records {
                write_line(&mut out, r)?;
            }
            out.flush()?;
            Ok(records.len())
        }
    }
}

fn write_line(out: &mut impl Write, record: &LogprobRecord) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, lps: &[Option<f64>]) -> LogprobRecord {
        LogprobRecord {
            id: id.into(),
            model_name: "gpt2".into(),
            tokens: lps.iter().enumerate().map(|(i, _)| format!(" w{i}")).collect(),
            logprobs: lps.to_vec(),
            truncated: false,
        }
    }

    #[test]
    fn round_trip_and_filter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let a = rec("a", &[None, Some(-0.1), Some(-1.0 / 3.0)]);
        let b = rec("b", &[Some(-2.5), Some(-1e-300)]);
        assert_eq!(cache_write(&[a.clone(), b.clone()], &path, false).unwrap(), 2);
        assert_eq!(cache_read(&path, None).unwrap(), vec![a.clone(), b]);
        let only_a: HashSet<String> = ["a".to_string()].into();
        assert_eq!(cache_read(&path, Some(&only_a)).unwrap(), vec![a]);
    }

    #[test]
    fn null_first_entry_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        cache_write(&[rec("a", &[None, Some(-1.5)])], &path, false).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "{\"id\":\"a\",\"model\":\"gpt2\",\"tokens\":[\" w0\",\" w1\"],\"logprobs\":[null,-1.5],\"truncated\":false}\n"
        );
    }

    #[test]
    fn truncated_last_line_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        cache_write(&[rec("a", &[None, Some(-1.0)])], &path, false).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\":\"b\",\"model\":\"gpt2\",\"tok").unwrap();
        match cache_read(&path, None) {
            Err(CacheError::MalformedLine { line_no, .. }) => assert_eq!(line_no, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn invalid_record_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        fs::write(
            &path,
            "{\"id\":\"a\",\"model\":\"m\",\"tokens\":[\"x\"],\"logprobs\":[0.5],\"truncated\":false}\n",
        )
        .unwrap();
        assert!(matches!(
            cache_read(&path, None),
            Err(CacheError::MalformedLine { line_no: 1, .. })
        ));
    }

    #[test]
    fn duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let a = rec("a", &[None, Some(-1.0)]);
        assert!(matches!(
            cache_write(&[a.clone(), a.clone()], &path, false),
            Err(CacheError::DuplicateId(_))
        ));
        cache_write(&[a.clone()], &path, false).unwrap();
        assert!(matches!(
            cache_write(&[a.clone()], &path, false),
            Err(CacheError::DuplicateId(id)) if id == "a"
        ));

        let a2 = rec("a", &[None, Some(-2.0)]);
        let b = rec("b", &[Some(-1.0)]);
        cache_write(&[b.clone()], &path, false).unwrap();
        cache_write(&[a2.clone()], &path, true).unwrap();
        assert_eq!(cache_read(&path, None).unwrap(), vec![b, a2]);
    }
}
