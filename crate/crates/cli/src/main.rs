fn main() {
    std::process::exit(physarum_cli::run_cli(std::env::args_os()));
}
