fn main() {
    std::process::exit(posgrid::cli::main_with_args(std::env::args_os()));
}
