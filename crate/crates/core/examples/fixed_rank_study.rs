// RP against random knots (PP1) and pivoted-Cholesky knots (PP2) at fixed
// rank on a smooth grid kernel.

use rpgp::diag::{fixed_rank_study, grid_kernel_matrix, median};
use rpgp::infer::ApproxKind;

pub fn run_example() -> rpgp::Result<()> {
    let k = grid_kernel_matrix(300, 0.1, 30.0);
    let methods = [ApproxKind::Rp, ApproxKind::Pp1, ApproxKind::Pp2];
    let ranks = [10, 25, 50];
    let reports = fixed_rank_study(&k, &methods, &ranks, 8, 1);

    println!("{:<6}{:>6}{:>14}{:>14}{:>14}", "method", "m", "frobenius", "spectral", "cond");
    for method in methods {
        for m in ranks {
            let cell: Vec<_> = reports.iter().filter(|r| r.method == method && r.rank == m).collect();
            if cell.is_empty() {
                continue;
            }
            println!(
                "{:<6}{:>6}{:>14.4}{:>14.4}{:>14.3e}",
                method.to_string(),
                m,
                median(cell.iter().map(|r| r.frobenius)),
                median(cell.iter().map(|r| r.spectral)),
                median(cell.iter().map(|r| r.cond_retained)),
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
