//! Dataset records, loaders, the MVEC embedding format and a synthetic
//! corpus generator.

mod mvec;
mod synth;
mod ubuntu;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::views::{tokenize, PosTag};

pub use mvec::{read_embeddings, read_mvec, write_mvec, EmbeddingTable, MVEC_MAGIC, MVEC_VERSION};
pub use synth::{gen_synthetic, SynthConfig};
pub use ubuntu::{load_ubuntu_csv, split_turns};

/// One context with its candidate pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dialogue_id: String,
    pub context: Vec<String>,
    pub candidates: Vec<String>,
    pub positive_index: usize,
    /// Per-token tags for each context utterance, overriding the tagger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_tags: Option<Vec<Vec<PosTag>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_tags: Option<Vec<Vec<PosTag>>>,
}

impl DialogueRecord {
    pub fn positive(&self) -> &str {
        &self.candidates[self.positive_index]
    }

    /// Checks the record invariants, returning the offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.dialogue_id.is_empty() {
            return Err(("dialogue_id", "must not be empty".into()));
        }
        if self.context.is_empty() {
            return Err(("context", "needs at least one utterance".into()));
        }
        if self.candidates.len() < 2 {
            return Err(("candidates", format!("needs at least 2, found {}", self.candidates.len())));
        }
        if self.positive_index >= self.candidates.len() {
            return Err((
                "positive_index",
                format!("{} is not below candidate count {}", self.positive_index, self.candidates.len()),
            ));
        }
        for (field, texts) in [("context", &self.context), ("candidates", &self.candidates)] {
            if let Some(i) = texts.iter().position(|t| tokenize(t).is_empty()) {
                return Err((field, format!("entry {i} has no tokens")));
            }
        }
        for (field, tags, texts) in [
            ("context_tags", &self.context_tags, &self.context),
            ("candidate_tags", &self.candidate_tags, &self.candidates),
        ] {
            let Some(tags) = tags else { continue };
            if tags.len() != texts.len() {
                return Err((field, format!("{} tag lists for {} utterances", tags.len(), texts.len())));
            }
            for (i, (t, text)) in tags.iter().zip(texts).enumerate() {
                let n = tokenize(text).len();
                if t.len() != n {
                    return Err((field, format!("entry {i}: {} tags for {n} tokens", t.len())));
                }
            }
        }
        Ok(())
    }
}

/// Reads one JSON record per line. Blank lines are ignored; errors carry
/// the 1-based line number.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<DialogueRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DialogueRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            cause: e.to_string(),
        })?;
        record.validate().map_err(|(field, message)| Error::Validation {
            path: path.to_path_buf(),
            line: i + 1,
            field,
            message,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<S: Serialize>(items: &[S], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Dataset file formats accepted by the loaders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Jsonl,
    /// Ubuntu Dialogue Corpus v2 CSV.
    UbuntuCsv,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::UbuntuCsv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Vec<DialogueRecord>> {
    match format {
        DatasetFormat::Jsonl => load_jsonl(path),
        DatasetFormat::UbuntuCsv => load_ubuntu_csv(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn line(id: &str, positive: usize) -> String {
        format!(
            "{{\"dialogue_id\":\"{id}\",\"context\":[\"hi there\",\"how do i boot\"],\"candidates\":[\"use grub\",\"no idea\"],\"positive_index\":{positive}}}"
        )
    }

    #[test]
    fn loads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, [line("a", 0), line("b", 1), line("c", 0)].join("\n") + "\n").unwrap();
        let records = load_jsonl(&path).unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.dialogue_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(records[1].positive(), "no idea");
    }

    #[test]
    fn positive_index_out_of_range_names_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, [line("a", 0), line("b", 2)].join("\n")).unwrap();
        match load_jsonl(&path).unwrap_err() {
            Error::Validation { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "positive_index");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parse_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, format!("{}\n{{not json\n", line("a", 0))).unwrap();
        assert!(matches!(load_jsonl(&path).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, "").unwrap();
        assert!(load_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn tag_lists_are_checked() {
        let mut r: DialogueRecord = serde_json::from_str(&line("a", 0)).unwrap();
        r.context_tags = Some(vec![vec![PosTag::Intj, PosTag::Adv], vec![PosTag::Noun]]);
        assert_eq!(r.validate().unwrap_err().0, "context_tags");
        r.context_tags = Some(vec![
            vec![PosTag::Intj, PosTag::Adv],
            vec![PosTag::Adv, PosTag::Aux, PosTag::Pron, PosTag::Verb],
        ]);
        assert!(r.validate().is_ok());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"INTJ\""));
        assert_eq!(serde_json::from_str::<DialogueRecord>(&json).unwrap(), r);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(DatasetFormat::from_path(Path::new("x/train.CSV")), DatasetFormat::UbuntuCsv);
        assert_eq!(DatasetFormat::from_path(Path::new("x/train.jsonl")), DatasetFormat::Jsonl);
    }
}
