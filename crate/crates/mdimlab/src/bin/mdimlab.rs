fn main() {
    std::process::exit(mdimlab::cli::run(std::env::args().collect()));
}
