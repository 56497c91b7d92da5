fn main() {
    std::process::exit(profinite::cli::main_with_args(std::env::args_os()));
}
