fn main() {
    std::process::exit(ucdi_cli::run(std::env::args_os()));
}
