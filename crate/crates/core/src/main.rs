fn main() {
    std::process::exit(transference::cli::run(std::env::args_os()));
}
