fn main() {
    std::process::exit(ofdr::cli::main_with_args(std::env::args_os()));
}
