//! Random oversampling, SMOTE and ADASYN on a small imbalanced 2-d set.

use commit_quality::classify::{adasyn, random_oversample, smote, Origin};

fn main() -> anyhow::Result<()> {
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for i in 0..20 {
        let t = i as f64 / 20.0;
        vectors.push(vec![t, 1.0 - t]);
        labels.push(false);
    }
    for i in 0..5 {
        vectors.push(vec![0.5 + 0.05 * i as f64, 0.55]);
        labels.push(true);
    }

    let r = random_oversample(&vectors, &labels, 1)?;
    println!("random: {} minority, {} majority", r.count(true), r.count(false));

    let s = smote(&vectors, &labels, 3, 1)?;
    println!("smote:  {} minority, {} majority", s.count(true), s.count(false));
    for (x, o) in s.items.iter().zip(&s.origins).filter(|(_, o)| matches!(o, Origin::Synthetic { .. })).take(3) {
        if let Origin::Synthetic { base, neighbor, lambda } = o {
            println!("  {x:.3?} between #{base} and #{neighbor} at {lambda:.2}");
        }
    }

    let a = adasyn(&vectors, &labels, 3, 1, 1.0)?;
    println!("adasyn: {} minority, {} majority", a.count(true), a.count(false));
    Ok(())
}
