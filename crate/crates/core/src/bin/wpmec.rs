fn main() {
    std::process::exit(wpmec::cli::run_cli(std::env::args_os()));
}
