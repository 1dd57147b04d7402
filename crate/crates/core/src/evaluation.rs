//! Competition metrics for three-way polarity: accuracy, recall averaged
//! over all three classes, and F1 averaged over Positive and Negative.
//!
//! Zero denominators are defined away: an empty gold row gives recall 0, an
//! empty predicted column gives precision 0, and F1 is 0 when precision and
//! recall are both 0.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::corpus::{Document, LabeledDocument, SentimentLabel};
use crate::embedding::EmbeddingTable;
use crate::ensemble::{EnsembleError, EnsembleModel};
use crate::Scalar;

const K: usize = SentimentLabel::COUNT;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{gold} gold labels but {predicted} predictions")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error(transparent)]
    Prediction(#[from] EnsembleError),
}

/// Rows are gold classes, columns predicted classes, canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; K]; K]) -> Self {
        Self { counts }
    }

    pub fn get(&self, gold: SentimentLabel, predicted: SentimentLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    fn row(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

pub fn confusion(gold: &[SentimentLabel], predicted: &[SentimentLabel]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(predicted) {
        m.counts[g.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub avg_recall: f64,
    /// Mean F1 of Positive and Negative.
    pub f1_pn: f64,
    /// Mean F1 over all three classes (supplementary).
    pub macro_f1: f64,
    /// Canonical class order.
    pub per_class: [ClassMetrics; K],
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn report(confusion: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = confusion.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class: [ClassMetrics; K] = std::array::from_fn(|c| {
        let tp = confusion.counts[c][c];
        let precision = ratio(tp, confusion.col(c));
        let recall = ratio(tp, confusion.row(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
        }
    });
    let pos = SentimentLabel::Positive.index();
    let neg = SentimentLabel::Negative.index();
    Ok(EvalReport {
        accuracy: ratio(confusion.trace(), total),
        avg_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / K as f64,
        f1_pn: (per_class[pos].f1 + per_class[neg].f1) / 2.0,
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / K as f64,
        per_class,
        confusion: *confusion,
    })
}

/// Predicts every document and scores the predictions against gold labels.
pub fn evaluate<T: Scalar>(
    model: &EnsembleModel<T>,
    dataset: &[LabeledDocument],
    embeddings: Option<&EmbeddingTable<T>>,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let docs: Vec<Document> = dataset.iter().map(|d| d.doc.clone()).collect();
    let predicted: Vec<SentimentLabel> = model
        .predict_batch(&docs, embeddings)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let gold: Vec<SentimentLabel> = dataset.iter().map(|d| d.label).collect();
    report(&confusion(&gold, &predicted)?)
}

impl EvalReport {
    /// Flat metric name → value map, including the nine confusion counts as
    /// `confusion_<gold>_<predicted>`.
    pub fn to_key_values(&self) -> BTreeMap<String, f64> {
        let mut kv = BTreeMap::new();
        kv.insert("accuracy".to_string(), self.accuracy);
        kv.insert("avg_recall".to_string(), self.avg_recall);
        kv.insert("f1_pn".to_string(), self.f1_pn);
        kv.insert("macro_f1".to_string(), self.macro_f1);
        for label in SentimentLabel::ALL {
            let m = self.per_class[label.index()];
            kv.insert(format!("precision_{label}"), m.precision);
            kv.insert(format!("recall_{label}"), m.recall);
            kv.insert(format!("f1_{label}"), m.f1);
            for predicted in SentimentLabel::ALL {
                kv.insert(
                    format!("confusion_{label}_{predicted}"),
                    self.confusion.get(label, predicted) as f64,
                );
            }
        }
        kv.insert("total".to_string(), self.confusion.total() as f64);
        kv
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy    {:.4}", self.accuracy)?;
        writeln!(f, "avg_recall  {:.4}", self.avg_recall)?;
        writeln!(f, "f1_pn       {:.4}", self.f1_pn)?;
        writeln!(f, "macro_f1    {:.4}", self.macro_f1)?;
        writeln!(f)?;
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}", "class", "precision", "recall", "f1")?;
        for label in SentimentLabel::ALL {
            let m = self.per_class[label.index()];
            writeln!(f, "{:<10}{:>10.4}{:>10.4}{:>10.4}", label.as_str(), m.precision, m.recall, m.f1)?;
        }
        writeln!(f)?;
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}   (rows: gold, columns: predicted)", "", "positive", "negative", "neutral")?;
        for gold in SentimentLabel::ALL {
            write!(f, "{:<10}", gold.as_str())?;
            for predicted in SentimentLabel::ALL {
                write!(f, "{:>10}", self.confusion.get(gold, predicted))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
