fn main() {
    std::process::exit(pkde_cli::main_with_args(std::env::args_os()));
}
