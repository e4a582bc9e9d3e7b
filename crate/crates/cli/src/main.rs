fn main() {
    std::process::exit(prexpect_cli::run_cli(std::env::args_os()));
}
