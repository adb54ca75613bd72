fn main() {
    std::process::exit(emocue::cli::run(std::env::args_os()));
}
