fn main() {
    std::process::exit(pdcrys_cli::run(std::env::args_os()));
}
