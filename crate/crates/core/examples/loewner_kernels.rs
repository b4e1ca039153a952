//! Divided-difference kernels, the T-map and its unital normalization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schatten_lab::estimator::{draw_spectrum, SpectrumLaw};
use schatten_lab::kernels::{
    divided_difference_kernel, loewner_min_eig, rx_kernel, schur_multiply, t_map, unital_cp_map,
    TMapParams,
};
use schatten_lab::matcore::{HermitianMatrix, PositiveDefiniteMatrix};
use schatten_lab::random::{gaussian_complex, haar_unitary};
use schatten_lab::schatten::{schatten_norm, Exponent};
use schatten_lab::verify::composition_residual;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = draw_spectrum(&mut rng, SpectrumLaw::ClusteredPairs, 6);
    println!("spectrum: {values:.4?}");

    for gamma in [0.1, 0.5, 1.0] {
        println!("gamma {gamma}: Loewner min eigenvalue {:.3e}", loewner_min_eig(&values, gamma)?);
    }

    let params = TMapParams::new(0.3, 0.7)?;
    let k = divided_difference_kernel(&values, params)?;
    println!("T-kernel entries in [{:.3e}, {:.3e}], alpha = {:.2}", k.min_entry(), k.max_entry(), params.alpha());

    let d = PositiveDefiniteMatrix::from_spectrum(values.clone(), haar_unitary(&mut rng, 6))?;
    let delta = gaussian_complex(&mut rng, 6);
    let image = t_map(&d, params, &delta)?;
    println!("|T(delta)|_1 = {:.4}, |delta|_1 = {:.4}", schatten_norm(&image, 1.0)?, schatten_norm(&delta, 1.0)?);
    println!("composition residual: {:.2e}", composition_residual(&d, 0.3, 0.7, &delta)?);

    let s_one = unital_cp_map(&d, 0.7, &HermitianMatrix::identity(6))?;
    println!("|S(I) - I| = {:.2e}", s_one.as_matrix().max_abs_diff(&HermitianMatrix::identity(6).into_matrix()));

    let rx = rx_kernel(&values, 1.0)?;
    let x = gaussian_complex(&mut rng, 6);
    let ratio = schatten_norm(&schur_multiply(&rx, &x)?, Exponent::Infinite)?
        / schatten_norm(&x, Exponent::Infinite)?;
    println!("RX multiplier on a gaussian matrix: {ratio:.4} (bound 2.5)");
    Ok(())
}
