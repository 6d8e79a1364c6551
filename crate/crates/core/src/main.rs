fn main() {
    std::process::exit(hazardlab::cli::run(std::env::args_os()));
}
