fn main() {
    std::process::exit(lipcert::cli::main_with_args(std::env::args_os()));
}
