fn main() {
    std::process::exit(resonance_lab::cli::main_with_args(std::env::args_os()));
}
