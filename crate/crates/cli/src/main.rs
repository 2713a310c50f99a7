fn main() {
    std::process::exit(bigpolar_cli::run(std::env::args_os()));
}
