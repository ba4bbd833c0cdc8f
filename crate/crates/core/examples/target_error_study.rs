// Rank each method needs before `‖K − Q‖_F < ε` on a matrix with
// eigenvalues `e^{−λi}`, next to the optimum from the exact spectrum.

use rpgp::diag::{exp_decay_matrix, median, target_error_study};
use rpgp::infer::ApproxKind;

pub fn run_example() -> rpgp::Result<()> {
    let k = exp_decay_matrix(100, 0.5, 7);
    let methods = [ApproxKind::Rp, ApproxKind::Pp1, ApproxKind::Pp2];
    let (optimal, rows) = target_error_study(&k, 0.1, &methods, 20, 3, None)?;
    println!("optimal rank {optimal}");
    for method in methods {
        let ranks: Vec<f64> = rows.iter().filter(|r| r.method == method).map(|r| r.rank as f64).collect();
        let worst = ranks.iter().cloned().fold(0.0, f64::max);
        println!("{:<4} median rank {:>5.1}  worst {worst}", method.to_string(), median(ranks.iter().copied()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
