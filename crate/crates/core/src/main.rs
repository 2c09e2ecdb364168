fn main() {
    std::process::exit(qudit_entangler::cli::main_with_args(std::env::args_os()));
}
