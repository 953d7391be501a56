fn main() {
    std::process::exit(escape_core::cli::main_with_args(std::env::args_os()));
}
