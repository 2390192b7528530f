fn main() {
    std::process::exit(rkbs::cli::run(std::env::args()));
}
