//! Ubuntu Dialogue Corpus v2 CSV ingestion.
//!
//! Two layouts are recognised by header:
//! * `Context,Utterance,Label` triples (the training split). Rows sharing an
//!   identical context string form one record; the label-1 row is the
//!   positive and label-0 rows are distractors, in file order.
//! * `Context,Ground Truth Utterance,Distractor_0,...` (valid/test splits).
//!   Each row is one record whose positive is candidate 0.

use std::collections::HashMap;
use std::path::Path;

use super::DialogueRecord;
use crate::error::{Error, Result};

const TURN_MARKERS: [&str; 2] = ["__eou__", "__eot__"];

/// Splits a flattened context into utterances on the end-of-utterance and
/// end-of-turn markers, dropping empty pieces.
pub fn split_turns(context: &str) -> Vec<String> {
    let mut turns = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in context.split_whitespace() {
        if TURN_MARKERS.contains(&word) {
            if !current.is_empty() {
                turns.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(word);
        }
    }
    if !current.is_empty() {
        turns.push(current.join(" "));
    }
    turns
}

fn strip_markers(text: &str) -> String {
    split_turns(text).join(" ")
}

pub fn load_ubuntu_csv(path: impl AsRef<Path>) -> Result<Vec<DialogueRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, 1, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, 1, e))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));

    let context_col = find(&["context"])
        .ok_or_else(|| Error::Invalid(format!("{}: missing `Context` column", path.display())))?;

    if let Some(truth_col) = find(&["ground truth utterance", "ground_truth_utterance"]) {
        let distractors: Vec<usize> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with("distractor"))
            .map(|(i, _)| i)
            .collect();
        let mut records = Vec::new();
        for (row_idx, row) in reader.records().enumerate() {
            let line = row_idx + 2;
            let row = row.map_err(|e| csv_error(path, line, e))?;
            let mut candidates = vec![strip_markers(field(&row, truth_col))];
            candidates.extend(distractors.iter().map(|&c| strip_markers(field(&row, c))));
            let record = DialogueRecord {
                dialogue_id: format!("ubuntu-{row_idx}"),
                context: split_turns(field(&row, context_col)),
                candidates,
                positive_index: 0,
                context_tags: None,
                candidate_tags: None,
            };
            validate(path, line, &record)?;
            records.push(record);
        }
        return Ok(records);
    }

    let response_col = find(&["utterance", "response"]).ok_or_else(|| {
        Error::Invalid(format!("{}: missing `Utterance`/`Response` column", path.display()))
    })?;
    let label_col = find(&["label"])
        .ok_or_else(|| Error::Invalid(format!("{}: missing `Label` column", path.display())))?;

    struct Group {
        first_line: usize,
        context: String,
        candidates: Vec<String>,
        positive: Option<usize>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut by_context: HashMap<String, usize> = HashMap::new();
    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2;
        let row = row.map_err(|e| csv_error(path, line, e))?;
        let context = field(&row, context_col).to_string();
        let label = parse_label(field(&row, label_col)).ok_or_else(|| Error::Validation {
            path: path.to_path_buf(),
            line,
            field: "label",
            message: format!("expected 0 or 1, found `{}`", field(&row, label_col)),
        })?;
        let g = *by_context.entry(context.clone()).or_insert_with(|| {
            groups.push(Group {
                first_line: line,
                context,
                candidates: Vec::new(),
                positive: None,
            });
            groups.len() - 1
        });
        let group = &mut groups[g];
        if label {
            if group.positive.is_some() {
                return Err(Error::Validation {
                    path: path.to_path_buf(),
                    line,
                    field: "label",
                    message: "context already has a positive response".into(),
                });
            }
            group.positive = Some(group.candidates.len());
        }
        group.candidates.push(strip_markers(field(&row, response_col)));
    }

    groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let positive_index = g.positive.ok_or_else(|| Error::Validation {
                path: path.to_path_buf(),
                line: g.first_line,
                field: "label",
                message: "context group has no positive response".into(),
            })?;
            let record = DialogueRecord {
                dialogue_id: format!("ubuntu-{i}"),
                context: split_turns(&g.context),
                candidates: g.candidates,
                positive_index,
                context_tags: None,
                candidate_tags: None,
            };
            validate(path, g.first_line, &record)?;
            Ok(record)
        })
        .collect()
}

fn field<'a>(row: &'a csv::StringRecord, col: usize) -> &'a str {
    row.get(col).unwrap_or("")
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().parse::<f64>().ok()? {
        v if v == 1.0 => Some(true),
        v if v == 0.0 => Some(false),
        _ => None,
    }
}

fn validate(path: &Path, line: usize, record: &DialogueRecord) -> Result<()> {
    record.validate().map_err(|(field, message)| Error::Validation {
        path: path.to_path_buf(),
        line,
        field,
        message,
    })
}

fn csv_error(path: &Path, line: usize, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        cause: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn splits_on_markers() {
        assert_eq!(split_turns("hi __eou__ __eot__ hello __eou__"), ["hi", "hello"]);
        assert_eq!(split_turns("no markers here"), ["no markers here"]);
        assert!(split_turns("__eou__ __eot__").is_empty());
    }

    #[test]
    fn groups_triples_by_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        fs::write(
            &path,
            "Context,Utterance,Label\n\
             \"hi __eou__ __eot__ my wifi is down __eou__\",try restarting network-manager __eou__,1\n\
             \"hi __eou__ __eot__ my wifi is down __eou__\",i like pie __eou__,0\n\
             other context __eou__,nope,0\n\
             other context __eou__,sure thing,1.0\n",
        )
        .unwrap();
        let records = load_ubuntu_csv(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].context, ["hi", "my wifi is down"]);
        assert_eq!(records[0].candidates, ["try restarting network-manager", "i like pie"]);
        assert_eq!(records[0].positive_index, 0);
        assert_eq!(records[1].positive_index, 1);
        assert_eq!(records[1].positive(), "sure thing");
    }

    #[test]
    fn test_layout_has_ten_candidates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("test.csv");
        let mut header = "Context,Ground Truth Utterance".to_string();
        let mut row = "a question __eou__,the answer __eou__".to_string();
        for i in 0..9 {
            header.push_str(&format!(",Distractor_{i}"));
            row.push_str(&format!(",wrong {i}"));
        }
        fs::write(&path, format!("{header}\n{row}\n")).unwrap();
        let records = load_ubuntu_csv(&path).unwrap();
        assert_eq!(records[0].candidates.len(), 10);
        assert_eq!(records[0].positive(), "the answer");
    }

    #[test]
    fn group_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "Context,Utterance,Label\nc,a,0\nc,b,0\n").unwrap();
        assert!(matches!(
            load_ubuntu_csv(&path).unwrap_err(),
            Error::Validation { field: "label", line: 2, .. }
        ));
        fs::write(&path, "Context,Utterance,Label\nc,a,1\n").unwrap();
        assert!(matches!(
            load_ubuntu_csv(&path).unwrap_err(),
            Error::Validation { field: "candidates", .. }
        ));
        fs::write(&path, "Context,Label\nc,1\n").unwrap();
        assert!(matches!(load_ubuntu_csv(&path).unwrap_err(), Error::Invalid(_)));
    }
}
