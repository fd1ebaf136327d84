fn main() {
    std::process::exit(squeezed_phase::cli::main_with_args(std::env::args_os()));
}
