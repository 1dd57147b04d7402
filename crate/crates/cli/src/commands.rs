use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use polarity_core::bundle::{self, EmbeddingRef};
use polarity_core::corpus::{self, Document, LabeledDocument, SentimentLabel};
use polarity_core::embedding::{file_digest, load_embeddings, EmbeddingTable};
use polarity_core::ensemble::{fit_ensemble, soft_vote};
use polarity_core::{evaluate, EnsembleModel, ModelBundle, Precision, Scalar};
use serde_json::{Map, Value};

use crate::config::Settings;
use crate::error::CliError;

fn require_file(path: &Path) -> Result<(), CliError> {
    match fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(CliError::Config(format!("{} is not a file", path.display()))),
        Err(e) => Err(CliError::io(path, e)),
    }
}

fn load_labeled(path: &Path) -> Result<Vec<LabeledDocument>, CliError> {
    corpus::load_labeled(path).map_err(|e| CliError::corpus(path, e))
}

pub fn train(s: &Settings) -> Result<(), CliError> {
    match s.precision() {
        Precision::F32 => train_as::<f32>(s),
        Precision::F64 => train_as::<f64>(s),
    }
}

fn train_as<T: Scalar>(s: &Settings) -> Result<(), CliError> {
    let cfg = s.ensemble_config::<T>()?;
    let model_path = s.model_path()?;
    let files: Vec<&PathBuf> = s
        .train_files
        .iter()
        .chain(&s.dev_files)
        .flatten()
        .collect();
    if s.train_files.as_ref().is_none_or(|f| f.is_empty()) {
        return Err(CliError::Config("train_files is not set".into()));
    }
    let embedding_path = if cfg.needs_embeddings() {
        let p = s.embedding_path.as_deref().ok_or_else(|| {
            CliError::Config("embedding_path is required by the configured embedding views".into())
        })?;
        Some(p)
    } else {
        None
    };
    for f in files.iter().map(|p| p.as_path()).chain(embedding_path) {
        require_file(f)?;
    }

    let mut datasets = Vec::new();
    for f in &files {
        let data = load_labeled(f)?;
        println!("{}: {}", f.display(), corpus::summarize(&data));
        datasets.push(data);
    }
    let data = corpus::concat(datasets);
    if files.len() > 1 {
        println!("combined: {}", corpus::summarize(&data));
    }

    let (table, embedding) = match embedding_path {
        Some(p) => {
            let format = s.embedding_format(p);
            let (table, digest) =
                load_embeddings::<T>(p, format, s.embedding_vocab_limit).map_err(|e| CliError::embedding(p, e))?;
            println!("embeddings: {} words, dimension {}", table.vocab_size(), table.dim());
            let r = EmbeddingRef {
                digest,
                dim: table.dim(),
                format,
                vocab_limit: s.embedding_vocab_limit,
            };
            (Some(table), Some(r))
        }
        None => (None, None),
    };

    let model = fit_ensemble(&data, &cfg, table.as_ref())?;
    println!("vocabulary: {} terms", model.tfidf.vocab_size());
    report_training_accuracy(&model, &data, table.as_ref())?;

    let snapshot = serde_json::to_value(s).expect("settings serialize");
    ModelBundle::new(model, embedding, snapshot)
        .save(model_path)
        .map_err(|e| CliError::bundle(model_path, e))?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn report_training_accuracy<T: Scalar>(
    model: &EnsembleModel<T>,
    data: &[LabeledDocument],
    table: Option<&EmbeddingTable<T>>,
) -> Result<(), CliError> {
    let mut correct = vec![0usize; model.views.len() + 1];
    let weights = model.weights();
    for d in data {
        let dists = model.view_distributions(&d.doc, table)?;
        for (i, dist) in dists.iter().enumerate() {
            correct[i] += usize::from(soft_vote(std::slice::from_ref(dist), &[T::one()]).label == d.label);
        }
        correct[dists.len()] += usize::from(soft_vote(&dists, &weights).label == d.label);
    }
    let n = data.len() as f64;
    for (view, c) in model.views.iter().zip(&correct) {
        println!("training accuracy {:<34} {:.4}", view.spec.to_string(), *c as f64 / n);
    }
    println!("training accuracy {:<34} {:.4}", "ensemble", correct[model.views.len()] as f64 / n);
    Ok(())
}

/// Loads the bundle plus, when the model needs one, the embedding file
/// after checking it is the file the model was trained with.
fn load_model<T: Scalar>(
    s: &Settings,
    path: &Path,
) -> Result<(ModelBundle<T>, Option<EmbeddingTable<T>>), CliError> {
    let bundle = ModelBundle::<T>::load(path).map_err(|e| CliError::bundle(path, e))?;
    let Some(r) = &bundle.embedding else {
        return Ok((bundle, None));
    };
    let p = s.embedding_path.as_deref().ok_or_else(|| {
        CliError::Config(format!(
            "the model needs the embedding file with digest {}; set embedding_path",
            r.digest
        ))
    })?;
    require_file(p)?;
    let mismatch = |found: String| CliError::DigestMismatch {
        path: p.to_path_buf(),
        expected: r.digest.clone(),
        found,
    };
    match load_embeddings::<T>(p, r.format, r.vocab_limit) {
        Ok((_, digest)) if digest != r.digest => Err(mismatch(digest)),
        Ok((table, _)) => Ok((bundle, Some(table))),
        Err(e) => match file_digest(p) {
            Ok(digest) if digest != r.digest => Err(mismatch(digest)),
            _ => Err(CliError::embedding(p, e)),
        },
    }
}

fn bundle_precision(path: &Path) -> Result<Precision, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    bundle::inspect(&bytes)
        .map(|i| i.precision)
        .map_err(|e| CliError::bundle(path, e))
}

pub fn predict(s: &Settings, input: &Path, output: Option<&Path>, labeled: bool) -> Result<(), CliError> {
    let model_path = s.model_path()?;
    match bundle_precision(model_path)? {
        Precision::F32 => predict_as::<f32>(s, model_path, input, output, labeled),
        Precision::F64 => predict_as::<f64>(s, model_path, input, output, labeled),
    }
}

fn predict_as<T: Scalar>(
    s: &Settings,
    model_path: &Path,
    input: &Path,
    output: Option<&Path>,
    labeled: bool,
) -> Result<(), CliError> {
    require_file(input)?;
    let (bundle, table) = load_model::<T>(s, model_path)?;
    let docs: Vec<Document> = if labeled {
        load_labeled(input)?.into_iter().map(|d| d.doc).collect()
    } else {
        corpus::load_unlabeled(input).map_err(|e| CliError::corpus(input, e))?
    };
    let predictions = bundle.model.predict_batch(&docs, table.as_ref())?;

    let mut text = String::from("id\tlabel\tp_pos\tp_neg\tp_neu\n");
    for (d, p) in docs.iter().zip(&predictions) {
        let [pos, neg, neu] = p.distribution.map(|v| v.widen());
        writeln!(text, "{}\t{}\t{pos:.6}\t{neg:.6}\t{neu:.6}", d.id, p.label).unwrap();
    }
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn evaluate_cmd(s: &Settings, input: Option<&Path>) -> Result<(), CliError> {
    let input = input
        .or(s.test_file.as_deref())
        .ok_or_else(|| CliError::Config("no input file given and test_file is not set".into()))?;
    let model_path = s.model_path()?;
    match bundle_precision(model_path)? {
        Precision::F32 => evaluate_as::<f32>(s, model_path, input),
        Precision::F64 => evaluate_as::<f64>(s, model_path, input),
    }
}

fn evaluate_as<T: Scalar>(s: &Settings, model_path: &Path, input: &Path) -> Result<(), CliError> {
    require_file(input)?;
    let data = load_labeled(input)?;
    let (bundle, table) = load_model::<T>(s, model_path)?;
    let report = evaluate(&bundle.model, &data, table.as_ref())?;
    print!("{report}");

    let mut flat = Map::new();
    for (k, v) in report.to_key_values() {
        let value = if k == "total" || k.starts_with("confusion_") {
            Value::from(v as u64)
        } else {
            Value::from(v)
        };
        flat.insert(k, value);
    }
    let path = s.report_path.clone().unwrap_or_else(|| {
        let mut name = input.as_os_str().to_owned();
        name.push(".report.json");
        PathBuf::from(name)
    });
    let json = serde_json::to_string_pretty(&flat).expect("report serializes") + "\n";
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    println!("\nreport written to {}", path.display());
    Ok(())
}

pub fn inspect(s: &Settings, path: Option<&Path>) -> Result<(), CliError> {
    let path = match path {
        Some(p) => p,
        None => s.model_path()?,
    };
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let info = bundle::inspect(&bytes).map_err(|e| CliError::bundle(path, e))?;
    println!("format_version: {}", info.format_version);
    println!("precision: {}", info.precision);
    println!("views:");
    for (spec, weight) in &info.views {
        println!("  {spec} (weight {weight})");
    }
    println!("vocab_size: {}", info.vocab_size);
    match &info.embedding {
        Some(e) => {
            println!("embedding_digest: {}", e.digest);
            println!("embedding_dim: {}", e.dim);
        }
        None => println!("embedding_digest: none"),
    }
    let classes: Vec<&str> = info.classes.iter().map(|c: &SentimentLabel| c.as_str()).collect();
    println!("class_order: {}", classes.join(", "));
    println!("parameters: {}", info.payload_values);
    Ok(())
}
