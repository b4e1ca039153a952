//! Mazur maps between Schatten spheres and the ratios built on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schatten_lab::mazur::{
    decomposition_residual, mazur_lipschitz_ratio, mazur_map, powers_diff_ratio, MazurVariant,
};
use schatten_lab::random::{gaussian_complex, random_positive};
use schatten_lab::schatten::schatten_norm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (p, q) = (2.0, 0.5);

    let f = gaussian_complex(&mut rng, 4);
    let f = f.scale(1.0 / schatten_norm(&f, p)?);
    let g = mazur_map(&f, p, q)?;
    println!("|f|_p = 1 -> |M(f)|_q = {:.12}", schatten_norm(&g, q)?);

    let y = &f + &gaussian_complex(&mut rng, 4).scale(1e-3);
    for variant in [MazurVariant::Map, MazurVariant::AbsPower] {
        let r = mazur_lipschitz_ratio(&f, &y, p, q, variant)?;
        println!("{variant:?} ratio near f: {r:?}");
    }

    let a = random_positive(&mut rng, 4, 1e-2, 1e2);
    let b = random_positive(&mut rng, 4, 1e-2, 1e2);
    println!("powers difference ratio: {:?}", powers_diff_ratio(&a, &b, 1.0, 2.0 / 3.0)?);

    for t in [0.1, 0.3, 0.45] {
        let c = decomposition_residual(&a, &b, t)?;
        println!(
            "t = {t}: residual {:.2e}, z constructions differ by {:.2e}",
            c.relative_residual(),
            c.relative_z_agreement()
        );
    }
    Ok(())
}
