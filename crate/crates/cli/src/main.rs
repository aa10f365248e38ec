fn main() {
    std::process::exit(hodegeo_cli::run(std::env::args_os()));
}
