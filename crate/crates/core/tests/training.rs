//! Behaviour of the trainers and the ensemble on synthetic data.

use polarity_core::corpus::{Document, LabeledDocument, SentimentLabel};
use polarity_core::embedding::EmbeddingTable;
use polarity_core::ensemble::{fit_ensemble, EnsembleConfig, EnsembleModel};
use polarity_core::evaluation::evaluate;
use polarity_core::linear::{fit_binary, fit_multiclass, fit_platt, ModelKind, Strategy, TrainConfig};
use polarity_core::vector::DenseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn noisy_binary(seed: u64, n: usize) -> (Vec<DenseVector<f64>>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let y = i % 2 == 0;
            let shift = if y { 0.7 } else { -0.7 };
            (DenseVector::new(vec![shift + gaussian(&mut r), 0.5 * shift + gaussian(&mut r), gaussian(&mut r)]), y)
        })
        .unzip()
}

#[test]
fn objective_is_non_increasing_after_five_epochs() {
    for seed in 0..4 {
        let (xs, ys) = noisy_binary(seed, 300);
        for kind in [ModelKind::Logistic, ModelKind::HingeSvm] {
            let cfg = TrainConfig {
                seed,
                max_epochs: 60,
                tolerance: 1e-15,
                ..TrainConfig::default()
            };
            let h = fit_binary(kind, &xs, &ys, &cfg).unwrap().objective_history;
            for (e, pair) in h.windows(2).enumerate().skip(4) {
                assert!(pair[1] <= pair[0], "{kind:?} seed {seed}: epoch {} rose {} -> {}", e + 2, pair[0], pair[1]);
            }
        }
    }
}

#[test]
fn platt_recovers_generating_parameters() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let scores: Vec<f64> = (0..10_000).map(|_| gaussian(&mut r)).collect();
    let ys: Vec<bool> = scores
        .iter()
        .map(|&s| r.random::<f64>() < 1.0 / (1.0 + (-2.0 * s).exp()))
        .collect();
    let p = fit_platt(&scores, &ys).unwrap();
    assert!((p.a + 2.0).abs() < 0.05 && p.b.abs() < 0.05, "{p:?}");
}

#[test]
fn three_class_blobs_are_learned_by_both_reductions() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let centers = [[2.0, 0.0], [-1.0, 1.7], [-1.0, -1.7]];
    let (xs, labels): (Vec<DenseVector<f64>>, Vec<SentimentLabel>) = (0..300)
        .map(|i| {
            let c = i % 3;
            let p = vec![centers[c][0] + 0.5 * gaussian(&mut r), centers[c][1] + 0.5 * gaussian(&mut r)];
            (DenseVector::new(p), SentimentLabel::ALL[c])
        })
        .unzip();
    for (kind, strategy) in [
        (ModelKind::Logistic, Strategy::OneVsRest),
        (ModelKind::HingeSvm, Strategy::OneVsOne),
        (ModelKind::Logistic, Strategy::OneVsOne),
        (ModelKind::HingeSvm, Strategy::OneVsRest),
    ] {
        let m = fit_multiclass(&xs, &labels, kind, strategy, &TrainConfig::default()).unwrap();
        let correct = xs.iter().zip(&labels).filter(|(x, l)| m.predict(*x).unwrap() == **l).count();
        let acc = correct as f64 / xs.len() as f64;
        assert!(acc >= 0.95, "{kind:?}/{strategy:?}: {acc}");
    }
}

/// Tweets drawn from class vocabularies with shared filler words, plus an
/// embedding table whose vectors point along a per-class axis.
fn synthetic_corpus(seed: u64, n: usize) -> (Vec<LabeledDocument>, EmbeddingTable<f64>) {
    let vocab: [&[&str]; 3] = [
        &["great", "love", "happy", "awesome", "win", "fun"],
        &["awful", "hate", "sad", "broken", "lose", "angry"],
        &["monday", "report", "meeting", "train", "office", "schedule"],
    ];
    let filler = ["today", "really", "just", "game", "phone", "people"];
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n)
        .map(|i| {
            let c = i % 3;
            let words: Vec<&str> = (0..6)
                .map(|_| match r.random_range(0..10) {
                    0..=4 => vocab[c][r.random_range(0..6)],
                    5 => vocab[(c + 1) % 3][r.random_range(0..6)],
                    _ => filler[r.random_range(0..filler.len())],
                })
                .collect();
            LabeledDocument::new(format!("d{seed}-{i}"), SentimentLabel::ALL[c], words.join(" "))
        })
        .collect();
    let mut entries = Vec::new();
    for (c, words) in vocab.iter().enumerate() {
        for w in *words {
            let mut v: Vec<f64> = (0..5).map(|_| 0.2 * gaussian(&mut r)).collect();
            v[c] += 1.0;
            entries.push((w.to_string(), v));
        }
    }
    for w in filler {
        entries.push((w.to_string(), (0..5).map(|_| 0.3 * gaussian(&mut r)).collect()));
    }
    (docs, EmbeddingTable::from_entries(5, entries).unwrap())
}

fn fitted() -> (EnsembleModel<f64>, EmbeddingTable<f64>, Vec<LabeledDocument>) {
    let (train, table) = synthetic_corpus(1, 240);
    let (test, _) = synthetic_corpus(2, 120);
    let model = fit_ensemble(&train, &EnsembleConfig::default(), Some(&table)).unwrap();
    (model, table, test)
}

#[test]
fn ensemble_is_not_worse_than_its_weakest_view() {
    let (model, table, test) = fitted();
    let ensemble = evaluate(&model, &test, Some(&table)).unwrap().accuracy;
    let mut worst = f64::INFINITY;
    for i in 0..model.views.len() {
        let mut single = model.clone();
        let weights: Vec<f64> = (0..model.views.len()).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
        single.set_weights(&weights).unwrap();
        worst = worst.min(evaluate(&single, &test, Some(&table)).unwrap().accuracy);
    }
    assert!(ensemble >= worst - 0.05, "ensemble {ensemble} vs weakest view {worst}");
    assert!(ensemble > 0.8, "ensemble accuracy {ensemble}");
}

#[test]
fn predictions_do_not_depend_on_batch_composition() {
    let (model, table, test) = fitted();
    let docs: Vec<Document> = test.iter().map(|d| d.doc.clone()).collect();
    let all = model.predict_batch(&docs, Some(&table)).unwrap();
    let mut reversed = docs.clone();
    reversed.reverse();
    let mut back = model.predict_batch(&reversed, Some(&table)).unwrap();
    back.reverse();
    assert_eq!(all, back);
    for (d, p) in docs.iter().zip(&all) {
        assert_eq!(model.predict_batch(std::slice::from_ref(d), Some(&table)).unwrap(), vec![*p]);
        let sum: f64 = p.distribution.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9 && p.distribution.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn rescaling_view_weights_keeps_every_label() {
    let (model, table, test) = fitted();
    let docs: Vec<Document> = test.iter().map(|d| d.doc.clone()).collect();
    let base = model.predict_batch(&docs, Some(&table)).unwrap();
    let mut scaled = model.clone();
    scaled.set_weights(&[7.5, 7.5, 7.5]).unwrap();
    let after = scaled.predict_batch(&docs, Some(&table)).unwrap();
    for (a, b) in base.iter().zip(&after) {
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let (train, table) = synthetic_corpus(3, 90);
    let cfg = EnsembleConfig::default();
    let a = fit_ensemble(&train, &cfg, Some(&table)).unwrap();
    let b = fit_ensemble(&train, &cfg, Some(&table)).unwrap();
    assert_eq!(a, b);
    let other_seed = EnsembleConfig {
        train: TrainConfig {
            seed: 99,
            ..cfg.train
        },
        ..cfg
    };
    assert_ne!(a, fit_ensemble(&train, &other_seed, Some(&table)).unwrap());
}

#[test]
fn single_precision_pipeline_tracks_double() {
    let (train, table) = synthetic_corpus(4, 150);
    let (test, _) = synthetic_corpus(5, 60);
    let narrow = EmbeddingTable::<f32>::from_entries(
        table.dim(),
        table.words().iter().map(|w| (w.clone(), table.get(w).unwrap().iter().map(|&v| v as f32).collect())),
    )
    .unwrap();
    let m64 = fit_ensemble(&train, &EnsembleConfig::<f64>::default(), Some(&table)).unwrap();
    let m32 = fit_ensemble(&train, &EnsembleConfig::<f32>::default(), Some(&narrow)).unwrap();
    let a = evaluate(&m64, &test, Some(&table)).unwrap().accuracy;
    let b = evaluate(&m32, &test, Some(&narrow)).unwrap().accuracy;
    assert!((a - b).abs() <= 0.05, "f64 {a} vs f32 {b}");
}
