fn main() {
    std::process::exit(dualcluster::cli::run(std::env::args_os().collect()));
}
