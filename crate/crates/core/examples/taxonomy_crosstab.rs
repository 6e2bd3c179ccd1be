//! Cross-tabulate annotated why categories against maintenance type.

use commit_quality::classify::QualityLabel;
use commit_quality::taxonomy::{crosstab, validate_annotation, AnnotatedMessage, Dimension, MaintenanceType};

fn ann(sha: &str, why: &[&str], what: &[&str], m: MaintenanceType) -> AnnotatedMessage {
    AnnotatedMessage {
        sha: sha.into(),
        quality: QualityLabel::WhyAndWhat,
        why_tags: why.iter().map(|s| s.to_string()).collect(),
        what_tags: what.iter().map(|s| s.to_string()).collect(),
        maintenance: Some(m),
    }
}

fn main() -> anyhow::Result<()> {
    let rows = vec![
        ann("a1", &["DI1"], &["SC1"], MaintenanceType::Corrective),
        ann("a2", &["DI2", "IR1"], &["SC2"], MaintenanceType::Corrective),
        ann("a3", &["IN2"], &["SC1", "illustrate_function"], MaintenanceType::Perfective),
        ann("a4", &["DO1"], &["describe_implementation_principle"], MaintenanceType::Adaptive),
        ann("a5", &["IN1"], &["SC3"], MaintenanceType::Perfective),
    ];
    for r in &rows {
        if let Err(problems) = validate_annotation(r) {
            println!("{}: {problems:?}", r.sha);
        }
    }
    print!("{}", crosstab(&rows, Dimension::Why)?.render_text());
    println!();
    print!("{}", crosstab(&rows, Dimension::What)?.render_text());

    let broken = ann("bad", &["XX9"], &[], MaintenanceType::Corrective);
    println!("\n{}: {:?}", broken.sha, validate_annotation(&broken).unwrap_err());
    Ok(())
}
