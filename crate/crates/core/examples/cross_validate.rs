//! Stratified 5-fold cross-validation of the Bi-LSTM against the
//! logistic-regression baseline.

use commit_quality::classify::{Oversampler, Technique, TrainConfig};
use commit_quality::evaluate::{cross_validate, render_columns};
use commit_quality::normalize::NormalizedMessage;

fn main() -> anyhow::Result<()> {
    let data: Vec<(NormalizedMessage, bool)> = (0..80)
        .map(|i| {
            let missing = i % 3 == 0;
            let text = if missing { format!("Update module {i}") } else { format!("Fix module {i} because it leaked handles") };
            // a few annotation errors keep the task from being trivial
            (NormalizedMessage::from_text(&text), missing ^ (i % 11 == 5))
        })
        .collect();

    let mut columns = Vec::new();
    for (name, technique) in [("bi-lstm", Technique::BiLstm), ("logreg", Technique::LogReg)] {
        let config = TrainConfig {
            embedding_dim: 8,
            hidden_dim: 8,
            epochs: 15,
            learning_rate: 0.01,
            oversampler: Oversampler::Random,
            technique,
            ..TrainConfig::default()
        };
        let report = cross_validate(&data, &config, 5, 0, true)?;
        columns.push((name, report.mean));
    }
    print!("{}", render_columns(&columns));
    Ok(())
}
