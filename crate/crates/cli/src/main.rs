fn main() {
    std::process::exit(dilute_cli::run(std::env::args_os()));
}
