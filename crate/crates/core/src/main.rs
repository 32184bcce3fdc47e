fn main() {
    std::process::exit(symlab::cli::main_with_args(std::env::args_os()));
}
