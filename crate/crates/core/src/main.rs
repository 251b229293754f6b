fn main() {
    std::process::exit(lattice_homog::cli::main_with_args(std::env::args_os()));
}
