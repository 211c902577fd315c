fn main() {
    std::process::exit(susceptivity::cli::main_with_args(std::env::args_os()));
}
