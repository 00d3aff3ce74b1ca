fn main() {
    std::process::exit(dualsvm::cli::main_with_args(std::env::args_os()));
}
