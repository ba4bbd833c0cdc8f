// Effective sample size of an AR(1) chain against its asymptotic value
// `N(1 − ρ)/(1 + ρ)`.

use rand_distr::{Distribution, StandardNormal};
use rpgp::infer::{ess, summarize};

pub fn run_example() -> rpgp::Result<()> {
    let n = 20_000;
    let mut g = rpgp::rng::seeded(3);
    for rho in [0.0f64, 0.5, 0.9] {
        let mut x = 0.0;
        let chain: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut g);
                x = rho * x + (1.0 - rho * rho).sqrt() * z;
                x
            })
            .collect();
        let s = summarize(&chain)?;
        println!(
            "rho {rho}: ess {:>8.0} (theory {:>8.0}), mean {:+.3}, 95% [{:.2}, {:.2}]",
            ess(&chain)?,
            n as f64 * (1.0 - rho) / (1.0 + rho),
            s.mean,
            s.lower,
            s.upper
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
