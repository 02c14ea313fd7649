fn main() {
    std::process::exit(bmsync::cli::run(std::env::args_os()));
}
