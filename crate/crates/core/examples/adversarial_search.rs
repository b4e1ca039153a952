//! Multi-start hill climbing on the main inequality ratio.

use schatten_lab::estimator::{maximize, ExponentBundle, Objective, ObjectiveId, SearchConfig};
use schatten_lab::schatten::Exponent;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = ExponentBundle {
        alpha: Some(1.0),
        q: Some(2.0 / 3.0),
        r: Some(Exponent::Infinite),
        ..Default::default()
    };
    let objective = Objective::new(ObjectiveId::Main, &bundle)?;
    let config = SearchConfig::new(6, 42, 500);
    let report = maximize(&objective, &config)?;

    println!("best ratio {:.8} at dim {} (start {})", report.best_ratio, report.best_dim, report.best_start);
    println!("plateau statistic {:.2e}", report.plateau_improvement);
    for (it, v) in report.trace.iter().rev().take(5).rev() {
        println!("  iteration {it:>4}: {v:.8}");
    }
    let start_best: Vec<String> = report.start_best.iter().map(|v| format!("{v:.4}")).collect();
    println!("per start: {}", start_best.join(" "));

    // The witness replays exactly.
    let inst = report.witness.to_instance()?;
    println!("replayed: {:?}", objective.evaluate(&inst)?);
    Ok(())
}
