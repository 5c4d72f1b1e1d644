fn main() {
    std::process::exit(armetric::cli::run());
}
