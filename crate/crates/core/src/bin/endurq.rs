fn main() {
    std::process::exit(endurq::cli::run(std::env::args_os()));
}
