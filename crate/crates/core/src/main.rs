fn main() {
    std::process::exit(robust_hedge::cli::main_with_args(std::env::args_os()));
}
