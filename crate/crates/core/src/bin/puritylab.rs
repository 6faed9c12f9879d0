fn main() {
    std::process::exit(puritylab::cli::main_with_args(std::env::args_os()));
}
