fn main() {
    std::process::exit(bicogan_cli::main_with_args(std::env::args_os()));
}
