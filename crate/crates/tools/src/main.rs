fn main() {
    std::process::exit(last_tools::cli::run(std::env::args()));
}
