fn main() {
    std::process::exit(qmetric::cli::main_with_args(std::env::args_os()));
}
