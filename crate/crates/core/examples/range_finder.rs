// The adaptive range finder grows Φ one Gaussian probe at a time until
// `r` consecutive probes fall below the threshold.

use rpgp::diag::exp_decay_matrix;
use rpgp::linalg::frobenius_diff;
use rpgp::sketch::{adaptive_rangefinder, default_probe_count, nystrom_with_projection, probe_threshold, range_residual};

pub fn run_example() -> rpgp::Result<()> {
    let k = exp_decay_matrix(200, 0.3, 11);
    let r = default_probe_count(k.n());
    for eps in [1e-1, 1e-2, 1e-3] {
        let found = adaptive_rangefinder(&k, eps, r, 5)?;
        let resid = range_residual(&k, &found.phi);
        let model = nystrom_with_projection(&k, found.phi)?;
        println!(
            "eps {eps:.0e}: threshold {:.2e}, rank {:>3}, probes {:>3}, |K - PK|_F {resid:.2e}, |K - Q|_F {:.2e}",
            probe_threshold(eps),
            model.rank(),
            found.probes,
            frobenius_diff(k.as_matrix(), &model.dense()),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
