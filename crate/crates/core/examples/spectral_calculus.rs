//! Jacobi eigensolver, real and imaginary powers, polar decomposition.

use schatten_lab::matcore::{herm_eig, imaginary_power, polar_decompose, ComplexMatrix};
use schatten_lab::random::{gaussian_complex, hermitian_gaussian, random_positive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let h = hermitian_gaussian(&mut rng, 5);
    let eig = herm_eig(&h)?;
    println!("eigenvalues: {:.4?}", eig.eigenvalues());
    println!("reconstruction error: {:.2e}", eig.reconstruct().max_abs_diff(h.as_matrix()));

    let d = random_positive(&mut rng, 5, 1e-3, 1e3);
    let half = d.power(0.5);
    let square = half.as_matrix() * half.as_matrix();
    println!("|(d^1/2)^2 - d| = {:.2e}", square.max_abs_diff(d.as_matrix()));

    // d^{it} is unitary for real t.
    let u = imaginary_power(&d, 1.7);
    let gram = &u.adjoint() * &u;
    println!("|d^(1.7i)* d^(1.7i) - I| = {:.2e}", gram.max_abs_diff(&ComplexMatrix::identity(5)));

    let a = gaussian_complex(&mut rng, 4);
    let polar = polar_decompose(&a)?;
    let back = &polar.isometry * polar.modulus.as_matrix();
    println!("|U|a| - a| = {:.2e}", back.max_abs_diff(&a));
    Ok(())
}
