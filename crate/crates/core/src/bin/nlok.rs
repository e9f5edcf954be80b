fn main() {
    std::process::exit(nlok::cli::main_with_args(std::env::args_os()));
}
