//! Per-repository sample sizes at 95% confidence and 5% margin, plus
//! inter-rater agreement.

use commit_quality::sampling::{clustered_sample_plan, cohen_kappa, LabelPair, SampleSpec};

fn main() -> anyhow::Result<()> {
    let populations = [21169, 2249, 2817, 2035, 1078];
    let (sizes, total) = clustered_sample_plan(&populations, &SampleSpec::default());
    for (n, s) in populations.iter().zip(&sizes) {
        println!("{n:>6} commits -> sample {s}");
    }
    println!("total {total}");

    let spec = SampleSpec::from_confidence(0.99, 0.05)?;
    let (_, strict) = clustered_sample_plan(&populations, &spec);
    println!("at 99% confidence: {strict}");

    let a = ["good", "good", "no_why", "no_what", "good", "neither"];
    let b = ["good", "no_why", "no_why", "no_what", "good", "neither"];
    let pairs: Vec<LabelPair> = a.iter().zip(&b).enumerate().map(|(i, (x, y))| LabelPair::new(i.to_string(), *x, *y)).collect();
    println!("cohen kappa {:.3}", cohen_kappa(&pairs)?);
    Ok(())
}
