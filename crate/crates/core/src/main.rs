fn main() {
    std::process::exit(knotstrength::cli::run(std::env::args_os()));
}
