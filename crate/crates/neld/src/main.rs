fn main() {
    std::process::exit(neld::cli::run_cli(std::env::args_os()));
}
