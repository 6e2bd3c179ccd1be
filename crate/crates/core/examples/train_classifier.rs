//! Train a small Bi-LSTM "missing why" detector, save it and load it back.

use commit_quality::classify::{BiLstmModel, BinaryClassifier, Oversampler, TrainConfig, train_with_report};
use commit_quality::normalize::NormalizedMessage;

fn main() -> anyhow::Result<()> {
    let subjects = ["parser", "cache", "login", "scheduler", "exporter", "router"];
    let mut data = Vec::new();
    for (i, s) in subjects.iter().cycle().take(36).enumerate() {
        let (text, missing_why) = match i % 3 {
            0 => (format!("Fix {s} crash because the input may be empty"), false),
            1 => (format!("Update {s} so that retries do not pile up"), false),
            _ => (format!("Update {s}"), true),
        };
        data.push((NormalizedMessage::from_text(&text), missing_why));
    }

    let config = TrainConfig {
        embedding_dim: 16,
        hidden_dim: 16,
        learning_rate: 0.01,
        epochs: 60,
        batch_size: 8,
        oversampler: Oversampler::Auto,
        ..TrainConfig::default()
    };
    let (model, report) = train_with_report(&data, &config)?;
    println!("oversampler {} after {} epochs, training accuracy {:.2}", report.oversampler, report.epochs_run, report.training_accuracy);

    let path = std::env::temp_dir().join("cql-example-cwhy.json");
    model.save(&path)?;
    let loaded = BiLstmModel::load(&path)?;
    for text in ["Update exporter", "Update exporter because the old API is deprecated"] {
        let p = loaded.probability(&NormalizedMessage::from_text(text));
        println!("p(missing why) = {p:.3}  {text}");
    }
    Ok(())
}
