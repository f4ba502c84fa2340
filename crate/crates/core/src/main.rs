fn main() {
    std::process::exit(cudfsolve::cli::run(std::env::args_os()));
}
