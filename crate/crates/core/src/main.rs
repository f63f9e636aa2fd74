fn main() {
    std::process::exit(petzlab::cli::run_from(std::env::args_os()));
}
