// Solves and log-determinants with `F Fᵀ + diag(D)` in O(nm²).

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rpgp::linalg::WoodburyInverse;

pub fn run_example() -> rpgp::Result<()> {
    let (n, m) = (200, 20);
    let mut g = rpgp::rng::seeded(1);
    let f = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut g));
    let d = DVector::from_fn(n, |i, _| 0.5 + (i % 7) as f64 / 10.0);
    let w = WoodburyInverse::from_factor(f.clone(), d.clone())?;

    let dense = &f * f.transpose() + DMatrix::from_diagonal(&d);
    let v = DVector::from_fn(n, |i, _| (i as f64 * 0.1).sin());
    let fast = w.apply(&v)?;
    let slow = dense.clone().lu().solve(&v).expect("dense system is nonsingular");
    let logdet = dense.cholesky().expect("positive definite").l().diagonal().map(|x| x.ln()).sum() * 2.0;

    println!("solve relative error {:.2e}", (&fast - &slow).norm() / slow.norm());
    println!("logdet {:.6} (dense {:.6})", w.logdet(), logdet);
    println!("quadratic form {:.6}", w.quad_form(&v)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
