fn main() {
    std::process::exit(stokes_gap::cli::main_with_args(std::env::args_os()));
}
