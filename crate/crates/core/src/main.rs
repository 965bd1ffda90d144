fn main() {
    std::process::exit(jprox::cli::run(std::env::args_os()));
}
