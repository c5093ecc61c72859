fn main() {
    std::process::exit(optlab::cli::run_cli(std::env::args_os()));
}
