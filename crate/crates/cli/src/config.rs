//! Run configuration: a flat TOML file whose keys can each be overridden by
//! a command-line flag of the same name.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use polarity_core::bow::{IdfMode, TfIdfConfig};
use polarity_core::embedding::{EmbeddingFormat, OovPolicy};
use polarity_core::ensemble::{EnsembleConfig, ViewSpec};
use polarity_core::linear::TrainConfig;
use polarity_core::preprocess::{Preprocessor, StopwordList};
use polarity_core::{Precision, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TfIdfModeArg {
    Smoothed,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFormatArg {
    Auto,
    Binary,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionArg {
    F32,
    F64,
}

/// Every configurable key. In the file all keys are optional; on the
/// command line each is a global `--<key>` flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
#[command(next_help_heading = "Configuration overrides", rename_all = "snake_case")]
pub struct Settings {
    /// Labeled training TSV files, concatenated in order.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub train_files: Option<Vec<PathBuf>>,
    /// Extra labeled files appended to the training data.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub dev_files: Option<Vec<PathBuf>>,
    /// Default labeled file for `evaluate`.
    #[arg(long, global = true)]
    pub test_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embedding_path: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embedding_format: Option<EmbeddingFormatArg>,
    /// Read only the first N embedding entries.
    #[arg(long, global = true)]
    pub embedding_vocab_limit: Option<usize>,
    /// One stopword per line; the built-in English list when unset.
    #[arg(long, global = true)]
    pub stopwords_path: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model_path: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tfidf_mode: Option<TfIdfModeArg>,
    #[arg(long, global = true)]
    pub l2_normalize: Option<bool>,
    #[arg(long, global = true)]
    pub min_df: Option<usize>,
    #[arg(long, global = true)]
    pub oov_seed: Option<u64>,
    /// Half-width of the uniform range for out-of-vocabulary vectors.
    #[arg(long, global = true)]
    pub oov_range: Option<f64>,
    /// Views as `<vectorizer>:<classifier>`, e.g. `tfidf:svm_ovo`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub views: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub view_weights: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub regularization_c: Option<f64>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub drop_urls: Option<bool>,
    #[arg(long, global = true)]
    pub precision: Option<PrecisionArg>,
    /// Where `evaluate` writes its JSON report.
    #[arg(long, global = true)]
    pub report_path: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut s: Settings = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for list in [&mut s.train_files, &mut s.dev_files].into_iter().flatten() {
            list.iter_mut().for_each(fix);
        }
        for p in [
            &mut s.test_file,
            &mut s.embedding_path,
            &mut s.stopwords_path,
            &mut s.model_path,
            &mut s.report_path,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(s)
    }

    /// `top` wins wherever it sets a key.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(base, top;
            train_files, dev_files, test_file, embedding_path, embedding_format,
            embedding_vocab_limit, stopwords_path, model_path, tfidf_mode, l2_normalize,
            min_df, oov_seed, oov_range, views, view_weights, regularization_c, max_epochs,
            tolerance, learning_rate, seed, drop_urls, precision, report_path,
        )
    }

    pub fn model_path(&self) -> Result<&Path, CliError> {
        self.model_path
            .as_deref()
            .ok_or_else(|| CliError::Config("model_path is not set".into()))
    }

    pub fn precision(&self) -> Precision {
        match self.precision.unwrap_or(PrecisionArg::F64) {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }

    /// Format named by the config, falling back to the file extension.
    pub fn embedding_format(&self, path: &Path) -> EmbeddingFormat {
        match self.embedding_format.unwrap_or(EmbeddingFormatArg::Auto) {
            EmbeddingFormatArg::Auto => EmbeddingFormat::from_path(path),
            EmbeddingFormatArg::Binary => EmbeddingFormat::Binary,
            EmbeddingFormatArg::Text => EmbeddingFormat::Text,
        }
    }

    pub fn view_specs(&self) -> Result<Vec<ViewSpec>, CliError> {
        match &self.views {
            None => Ok(ViewSpec::default_views()),
            Some(v) if v.is_empty() => Err(CliError::Config("views must not be empty".into())),
            Some(v) => v
                .iter()
                .map(|s| s.parse().map_err(CliError::Config))
                .collect(),
        }
    }

    /// Checks numeric ranges and builds the training configuration.
    pub fn ensemble_config<T: Scalar>(&self) -> Result<EnsembleConfig<T>, CliError> {
        let views = self.view_specs()?;
        let weights = match &self.view_weights {
            None => vec![1.0; views.len()],
            Some(w) if w.len() != views.len() => {
                return Err(CliError::Config(format!(
                    "view_weights has {} entries for {} views",
                    w.len(),
                    views.len()
                )))
            }
            Some(w) if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) => {
                return Err(CliError::Config(
                    "view_weights must be finite, non-negative and not all zero".into(),
                ))
            }
            Some(w) => w.clone(),
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::Config(format!("{name} must be a positive number, got {v}")))
            }
        };
        let c = positive("regularization_c", self.regularization_c.unwrap_or(1.0))?;
        let lr = positive("learning_rate", self.learning_rate.unwrap_or(0.1))?;
        let oov_range = positive("oov_range", self.oov_range.unwrap_or(0.25))?;
        let tolerance = self.tolerance.unwrap_or(1e-6);
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(CliError::Config(format!("tolerance must be >= 0, got {tolerance}")));
        }
        let max_epochs = self.max_epochs.unwrap_or(200);
        if max_epochs == 0 {
            return Err(CliError::Config("max_epochs must be at least 1".into()));
        }
        let min_df = self.min_df.unwrap_or(1);
        if min_df == 0 {
            return Err(CliError::Config("min_df must be at least 1".into()));
        }
        if self.embedding_vocab_limit == Some(0) {
            return Err(CliError::Config("embedding_vocab_limit must be at least 1".into()));
        }

        let stopwords = match &self.stopwords_path {
            None => StopwordList::english(),
            Some(p) => StopwordList::load(p).map_err(|e| CliError::io(p, e))?,
        };
        Ok(EnsembleConfig {
            views,
            weights: weights.into_iter().map(T::of).collect(),
            tfidf: TfIdfConfig {
                mode: match self.tfidf_mode.unwrap_or(TfIdfModeArg::Smoothed) {
                    TfIdfModeArg::Smoothed => IdfMode::Smoothed,
                    TfIdfModeArg::PaperLiteral => IdfMode::PaperLiteral,
                },
                l2_normalize: self.l2_normalize.unwrap_or(true),
                min_df,
            },
            oov: OovPolicy::new(self.oov_seed.unwrap_or(0), T::of(oov_range)),
            train: TrainConfig {
                regularization_c: T::of(c),
                max_epochs,
                tolerance: T::of(tolerance),
                learning_rate: T::of(lr),
                seed: self.seed.unwrap_or(0),
            },
            preprocessor: Preprocessor::new(stopwords, self.drop_urls.unwrap_or(false)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<Settings>("max_epochs = 3\nlearning_rat = 0.1\n").unwrap_err();
        assert!(err.message().contains("learning_rat"));
    }

    #[test]
    fn flags_override_file_values() {
        let file: Settings = toml::from_str("max_epochs = 3\nseed = 9\nviews = [\"tfidf:svm_ovo\"]").unwrap();
        let flags = Settings {
            seed: Some(1),
            ..Settings::default()
        };
        let s = file.overlay(flags);
        assert_eq!((s.max_epochs, s.seed), (Some(3), Some(1)));
        assert_eq!(s.view_specs().unwrap().len(), 1);
    }

    #[test]
    fn out_of_range_values_are_config_errors() {
        for text in [
            "regularization_c = -1.0",
            "max_epochs = 0",
            "oov_range = 0.0",
            "views = [\"tfidf:svm_ovo\"]\nview_weights = [1.0, 2.0]",
            "views = [\"bag:svm_ovo\"]",
        ] {
            let s: Settings = toml::from_str(text).unwrap();
            assert!(matches!(s.ensemble_config::<f64>(), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "train_files = [\"a.tsv\"]\nmodel_path = \"/abs/m.bin\"\n").unwrap();
        let s = Settings::from_file(&path).unwrap();
        assert_eq!(s.train_files.unwrap(), vec![dir.path().join("a.tsv")]);
        assert_eq!(s.model_path.unwrap(), PathBuf::from("/abs/m.bin"));
    }
}
