fn main() {
    std::process::exit(quapprox::harness::cli::run(std::env::args_os()));
}
