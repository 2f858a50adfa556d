fn main() {
    std::process::exit(edrod::cli::main_with_args(std::env::args_os()));
}
