// Knot-based approximations: subset of regressors (SoR) and its
// diagonal-corrected form (FITC), with random and pivoted knots.

use rpgp::approx::{select_knots_pivoted, select_knots_random, GpApproximation, KnotBudget};
use rpgp::kernels::{KernelSpec, Points};
use rpgp::linalg::frobenius_diff;

pub fn run_example() -> rpgp::Result<()> {
    let x = Points::grid(0.0, 1.0, 150);
    let kernel = KernelSpec::squared_exponential(30.0, 1.0)?;
    let k = kernel.gram(&x)?;
    for m in [5, 10, 20] {
        let random = select_knots_random(x.len(), m, 9)?;
        let pivoted = select_knots_pivoted(&k, KnotBudget::Rank(m))?;
        let sor = GpApproximation::sor(&kernel, &x, &random)?;
        let fitc = GpApproximation::fitc(&kernel, &x, &random)?;
        let sor_piv = GpApproximation::sor(&kernel, &x, &pivoted)?;
        let err = |a: &GpApproximation| frobenius_diff(k.as_matrix(), a.cov_dense().as_matrix());
        let diag_gap = (k.diagonal() - sor.cov_dense().diagonal()).max();
        println!(
            "m = {m:>2}: SoR random {:.3}, FITC random {:.3}, SoR pivoted {:.3}, worst SoR variance deficit {diag_gap:.3}",
            err(&sor),
            err(&fitc),
            err(&sor_piv),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
