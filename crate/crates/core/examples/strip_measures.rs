//! Harmonic measure of the strip boundary and its doubling constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schatten_lab::strip::{
    boundary_measure, dilate, doubling_bound, doubling_ratio, reference_measure, BoundarySet,
};
use schatten_lab::verify::random_boundary_set;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for g in [0.1, 0.5, 0.9] {
        let one = boundary_measure(g, &BoundarySet::side(1)?)?;
        let full = boundary_measure(g, &BoundarySet::full())?;
        println!("gamma0 {g}: side one {one:.10}, whole boundary {full:.10}");
    }

    let a = BoundarySet::new(vec![(-1.0, 0.5), (2.0, 3.0)], vec![(0.0, 0.2)])?;
    let b = dilate(&a);
    println!("A  = {:?} | {:?}", a.intervals(0), a.intervals(1));
    println!("2A = {:?} | {:?}", b.intervals(0), b.intervals(1));
    println!("reference: mu(2A) = {:.6}, 2 mu(A) = {:.6}", reference_measure(&b)?, 2.0 * reference_measure(&a)?);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in [0.25, 0.75] {
        let worst = (0..100)
            .map(|_| doubling_ratio(g, &random_boundary_set(&mut rng)?).map(|d| d.ratio))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("gamma0 {g}: worst doubling ratio {worst:.4} (bound {:.4})", doubling_bound(g));
    }
    Ok(())
}
