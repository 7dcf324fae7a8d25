fn main() {
    std::process::exit(wardwatt::cli::run_cli(std::env::args_os()));
}
