// Posterior for `(θ₁, θ₂, τ)` on simulated bump data with the RP
// approximation at target error 0.1.

use rpgp::cli::synth::{preset, SyntheticSpec};
use rpgp::infer::{fit, summarize, ApproxConfig, ApproxKind, GammaPrior, GibbsConfig, PriorSpec, RankMode};

pub fn run_example() -> rpgp::Result<()> {
    let (centers, widths, amplitudes) = preset("smooth")?;
    let data = SyntheticSpec { centers, widths, amplitudes, n: 200, noise: 0.1, train_fraction: 0.8, seed: 5 }.generate()?;
    let priors = PriorSpec::new(GammaPrior::new(1.0, 10.0)?, GammaPrior::new(2.0, 20.0)?, PriorSpec::uniform_grid(100.0, 25))?;
    let approx = ApproxConfig::new(ApproxKind::Rp, RankMode::TargetError(0.1));
    let config = GibbsConfig { iterations: 600, burnin: 200, seed: 1, ..GibbsConfig::default() };
    let res = fit(&data, &priors, &approx, &config)?;

    for (name, chain) in [("theta1", &res.samples.theta1), ("theta2", &res.samples.theta2), ("tau", &res.samples.tau)] {
        let s = summarize(chain)?;
        println!("{name:<7} {:>10.4} [{:.4}, {:.4}] ess {:.0}", s.mean, s.lower, s.upper, s.ess);
    }
    println!("mean rank {:.1}", res.samples.mean_rank());
    if let Some(e) = res.test_mspe {
        println!("test mspe {e:.4e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
