// Predicting with the RP approximation at fixed hyperparameters, next to
// the exact GP predictive mean.

use nalgebra::DVector;
use rpgp::approx::GpApproximation;
use rpgp::infer::{mspe, predict, PredictTarget};
use rpgp::kernels::{KernelSpec, Points};
use rpgp::linalg::cholesky;

pub fn run_example() -> rpgp::Result<()> {
    let x = Points::grid(0.0, 1.0, 120);
    let f = |t: f64| (6.0 * t).sin() + 0.5 * (15.0 * t).cos();
    let y = DVector::from_fn(x.len(), |i, _| f(x.row(i)[0]) + 0.05 * ((i * 37 % 11) as f64 - 5.0) / 5.0);
    let tau = 400.0;
    let kernel = KernelSpec::squared_exponential(50.0, 1.0)?;
    let at = Points::from_1d(&[0.05, 0.33, 0.5, 0.71, 0.97]);
    let truth = DVector::from_fn(at.len(), |i, _| f(at.row(i)[0]));

    let exact = {
        let c = cholesky(&kernel.gram(&x)?.add_diagonal(1.0 / tau))?;
        kernel.cross_matrix(&at, &x)? * c.solve_vec(&y)
    };
    for m in [5, 10, 20] {
        let approx = GpApproximation::rp_fixed_rank(&kernel, &x, m, m, 1, true)?;
        let p = predict(&approx, tau, &y, &PredictTarget::NewLocations(at.clone()))?;
        println!(
            "m = {m:>2}: mspe {:.2e} (exact GP {:.2e}), max |mean - exact| {:.2e}, mean sd {:.3}",
            mspe(&p.mean, &truth)?,
            mspe(&exact, &truth)?,
            (&p.mean - &exact).amax(),
            p.cov.variance().map(f64::sqrt).mean(),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
