fn main() {
    std::process::exit(oscimarket_cli::run(std::env::args_os()));
}
