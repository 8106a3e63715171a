fn main() {
    std::process::exit(semitrailer::cli::main_with_args(std::env::args_os()));
}
