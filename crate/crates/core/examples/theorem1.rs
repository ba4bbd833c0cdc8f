// How often a width-`⌊m/ε⌋` Gaussian sketch lands within `1 + ε` of the
// best rank-`m` error.

use rpgp::kernels::{KernelSpec, Points};
use rpgp::sketch::theorem1_montecarlo;

pub fn run_example() -> rpgp::Result<()> {
    let k = KernelSpec::squared_exponential(1.0, 1.0)?.gram(&Points::grid(0.0, 10.0, 100))?;
    let out = theorem1_montecarlo(&k, 10, 0.5, 100, 42)?;
    println!("best rank-10 error      {:.4e}", out.best_rank_error);
    println!("sketch width            {}", out.sketch_width);
    println!("success rate (Frobenius) {:.2}", out.frobenius_rate);
    println!("success rate (spectral)  {:.2}", out.spectral_rate);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
