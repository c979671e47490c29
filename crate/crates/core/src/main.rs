fn main() {
    std::process::exit(hschain::cli::main_with_args(std::env::args_os()));
}
