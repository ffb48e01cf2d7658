fn main() {
    std::process::exit(regfolio_cli::main_with(std::env::args_os()));
}
