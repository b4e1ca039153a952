//! The analytic family on the strip: boundary norms and the convexity defect.

use schatten_lab::estimator::{random_instance, InstanceSpec, SpectrumLaw, XLaw};
use schatten_lab::strip::{boundary_norm_profile, convexity_defect, AnalyticFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = InstanceSpec {
        dim: 3,
        spectrum_law: SpectrumLaw::LogUniform,
        x_law: XLaw::HermitianGaussian,
        seed: 6,
    };
    let (d, x) = random_instance(&spec)?;
    let alpha = 1.0;
    let family = AnalyticFamily::new(d, x, alpha)?;

    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let profile = boundary_norm_profile(&family, 1.0, &grid)?;
    println!("|F(it)|_1   = {:.10?}", profile.norms0);
    println!("|F(1+it)|_1 = {:.10?}", profile.norms1);

    let gamma0 = alpha / (1.0 + alpha);
    for q in [0.5, 1.0, 2.0] {
        match convexity_defect(&family, gamma0, q)? {
            Some(v) => println!("q = {q}: defect {v:.6}"),
            None => println!("q = {q}: degenerate family"),
        }
    }
    Ok(())
}
