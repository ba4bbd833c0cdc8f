// Two nearly collinear points make the kernel matrix ill conditioned: a
// change of 0.0035 in K moves its inverse by about 67.

use rpgp::kernels::{KernelSpec, Points};
use rpgp::linalg::{condition_number, frobenius_diff};

pub fn run_example() -> rpgp::Result<()> {
    let x = Points::from_1d(&[0.1, 0.2]);
    let k = KernelSpec::squared_exponential(0.5, 1.0)?.gram(&x)?;
    let k_new = KernelSpec::squared_exponential(0.75, 1.0)?.gram(&x)?;

    let inv = k.as_matrix().clone().try_inverse().expect("K is invertible");
    let inv_new = k_new.as_matrix().clone().try_inverse().expect("K_new is invertible");

    println!("K off-diagonal      {:.6}", k.as_matrix()[(0, 1)]);
    println!("K_new off-diagonal  {:.6}", k_new.as_matrix()[(0, 1)]);
    println!("K^-1     = [{:.4} {:.4}]", inv[(0, 0)], inv[(0, 1)]);
    println!("K_new^-1 = [{:.4} {:.4}]", inv_new[(0, 0)], inv_new[(0, 1)]);
    println!("|K - K_new|_F       {:.4}", frobenius_diff(k.as_matrix(), k_new.as_matrix()));
    println!("|K^-1 - K_new^-1|_F {:.4}", frobenius_diff(&inv, &inv_new));
    println!("cond(K)             {:.1}", condition_number(&k)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
