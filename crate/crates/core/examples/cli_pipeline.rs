// The command line end to end: simulate, fit, predict.

pub fn run_example() -> rpgp::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let (data, summary, samples, preds) = (path("data.csv"), path("fit.csv"), path("samples.csv"), path("pred.csv"));

    rpgp::cli::run(["rpgp", "synth", "--preset", "smooth", "--n", "150", "--seed", "4", "--out", &data])?;
    rpgp::cli::run([
        "rpgp", "fit", "--data", &data, "--grid-max", "100", "--grid-size", "20", "--iterations", "300", "--burnin", "100",
        "--samples", &samples, "--seed", "4", "--out", &summary,
    ])?;
    rpgp::cli::run(["rpgp", "predict", "--data", &data, "--samples", &samples, "--out", &preds])?;

    print!("{}", std::fs::read_to_string(&summary)?);
    let predictions = std::fs::read_to_string(&preds)?;
    println!("{} prediction rows", predictions.lines().filter(|l| !l.starts_with('#')).count() - 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> rpgp::Result<()> {
    run_example()
}
