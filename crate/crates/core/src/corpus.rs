//! Labeled tweet datasets: TSV ingestion, class statistics and concatenation.
//!
//! Files are UTF-8, one record per line, `id<TAB>label<TAB>text` for labeled
//! data and `id<TAB>text` for unlabeled data. Blank lines are skipped; LF and
//! CRLF endings are both accepted.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: unknown label {label:?} (expected positive, negative or neutral)")]
    UnknownLabel { line: usize, label: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Three-way message polarity.
///
/// The declaration order is the canonical class order used by every
/// probability vector and confusion matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [Self::Positive, Self::Negative, Self::Neutral];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseLabelError(pub String);

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown sentiment label {:?}", self.0)
    }
}

impl std::error::Error for ParseLabelError {}

impl FromStr for SentimentLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub doc: Document,
    pub label: SentimentLabel,
}

impl LabeledDocument {
    pub fn new(id: impl Into<String>, label: SentimentLabel, text: impl Into<String>) -> Self {
        Self {
            doc: Document::new(id, text),
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub total: usize,
    per_class: [usize; SentimentLabel::COUNT],
}

impl DatasetSummary {
    pub fn count(&self, label: SentimentLabel) -> usize {
        self.per_class[label.index()]
    }

    /// Counts in canonical class order.
    pub fn per_class(&self) -> [usize; SentimentLabel::COUNT] {
        self.per_class
    }

    /// Whether every one of the three classes occurs at least once.
    pub fn has_all_classes(&self) -> bool {
        self.per_class.iter().all(|&c| c > 0)
    }

    pub fn missing_classes(&self) -> Vec<SentimentLabel> {
        SentimentLabel::ALL
            .into_iter()
            .filter(|l| self.count(*l) == 0)
            .collect()
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total {} | positive {} | negative {} | neutral {}",
            self.total,
            self.count(SentimentLabel::Positive),
            self.count(SentimentLabel::Negative),
            self.count(SentimentLabel::Neutral)
        )
    }
}

pub fn summarize(dataset: &[LabeledDocument]) -> DatasetSummary {
    let mut summary = DatasetSummary::default();
    for record in dataset {
        summary.per_class[record.label.index()] += 1;
    }
    summary.total = dataset.len();
    summary
}

/// Concatenates datasets in argument order. Duplicate ids are kept.
pub fn concat<T>(datasets: impl IntoIterator<Item = Vec<T>>) -> Vec<T> {
    datasets.into_iter().flatten().collect()
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledDocument>, CorpusError> {
    read_labeled(File::open(path)?)
}

pub fn load_unlabeled(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    read_unlabeled(File::open(path)?)
}

pub fn read_labeled<R: Read>(reader: R) -> Result<Vec<LabeledDocument>, CorpusError> {
    let mut out = Vec::new();
    for_each_record(reader, 3, |line, fields| {
        let label = fields[1]
            .parse::<SentimentLabel>()
            .map_err(|_| CorpusError::UnknownLabel {
                line,
                label: fields[1].to_string(),
            })?;
        out.push(LabeledDocument::new(fields[0], label, fields[2]));
        Ok(())
    })?;
    Ok(out)
}

pub fn read_unlabeled<R: Read>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut out = Vec::new();
    for_each_record(reader, 2, |_, fields| {
        out.push(Document::new(fields[0], fields[1]));
        Ok(())
    })?;
    Ok(out)
}

fn for_each_record<R, F>(reader: R, columns: usize, mut sink: F) -> Result<(), CorpusError>
where
    R: Read,
    F: FnMut(usize, &[&str]) -> Result<(), CorpusError>,
{
    let mut reader = BufReader::new(reader);
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let raw = std::str::from_utf8(&buf).map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            reason: format!("invalid UTF-8 ({e})"),
        })?;
        let line = raw.strip_suffix('\n').unwrap_or(raw);
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields: Vec<&str> = line.split('\t').collect();
        // some SemEval distributions end every record with a stray tab
        if fields.len() == columns + 1 && fields[columns].is_empty() {
            fields.pop();
        }
        if fields.len() != columns {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                reason: format!("expected {columns} tab-separated columns, found {}", fields.len()),
            });
        }
        if fields[0].is_empty() {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                reason: "empty id".into(),
            });
        }
        sink(line_no, &fields)?;
    }
    Ok(())
}
