fn main() {
    std::process::exit(schurlab::cli::main_with_args(std::env::args_os()));
}
