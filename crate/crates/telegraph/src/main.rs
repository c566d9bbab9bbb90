fn main() {
    std::process::exit(telegraph::cli_io::run_from_env());
}
