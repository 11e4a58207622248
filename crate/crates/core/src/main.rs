fn main() {
    std::process::exit(gaussurf::cli::run(std::env::args_os()));
}
