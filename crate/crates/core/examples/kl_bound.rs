// KL divergence between the exact and RP marginal distributions of the
// data, against `{n + (n/σ)²}·‖K − Q‖_F`.

use nalgebra::DVector;
use rpgp::diag::{kl_bound, kl_gaussians};
use rpgp::kernels::{KernelSpec, Points};
use rpgp::linalg::{frobenius_diff, WoodburyInverse};
use rpgp::sketch::nystrom_fixed_rank;

pub fn run_example() -> rpgp::Result<()> {
    let n = 80;
    let sigma = 0.3;
    let k = KernelSpec::squared_exponential(4.0, 1.0)?.gram(&Points::grid(0.0, 1.0, n))?;
    let full = k.add_diagonal(sigma * sigma);
    for m in [3, 6, 12] {
        let model = nystrom_fixed_rank(&k, m, m, m as u64)?;
        let eps = frobenius_diff(k.as_matrix(), &model.dense());
        let approx = WoodburyInverse::from_factor(model.features(), DVector::from_element(n, sigma * sigma))?;
        let kl = kl_gaussians(&full, &approx)?;
        println!("m = {m:>2}: KL {kl:.3e}  bound {:.3e}", kl_bound(n, sigma, eps));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
