fn main() {
    std::process::exit(ambc_cli::run(std::env::args_os()));
}
