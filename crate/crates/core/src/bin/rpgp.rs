fn main() {
    std::process::exit(rpgp::cli::main());
}
