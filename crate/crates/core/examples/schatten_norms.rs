//! Schatten norms and quasi-norms across the exponent range.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schatten_lab::matcore::singular_values;
use schatten_lab::random::gaussian_complex;
use schatten_lab::schatten::{schatten_norm, Exponent, ExponentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = gaussian_complex(&mut rng, 6);
    let b = gaussian_complex(&mut rng, 6);
    println!("singular values: {:.4?}", singular_values(&a)?);

    for p in [0.25, 0.5, 2.0 / 3.0, 1.0, 2.0, 4.0] {
        println!("|a|_{p:.3} = {:.6}", schatten_norm(&a, p)?);
    }
    println!("|a|_inf = {:.6}", schatten_norm(&a, Exponent::Infinite)?);

    // Below 1 only the p-triangle inequality survives.
    let p = 0.5;
    let lhs = schatten_norm(&(&a + &b), p)?.powf(p);
    let rhs = schatten_norm(&a, p)?.powf(p) + schatten_norm(&b, p)?.powf(p);
    println!("|a+b|^p = {lhs:.4} <= |a|^p + |b|^p = {rhs:.4}");

    // Derived exponents of the main inequality: 1/q = 1/p + alpha/s.
    let cfg = ExponentConfig::new(1.0, 4.0 / 3.0, Exponent::Infinite)?;
    println!("alpha=1, s=4/3, r=inf -> p = {:.4}, q = {:.4}", cfg.p, cfg.q);
    Ok(())
}
