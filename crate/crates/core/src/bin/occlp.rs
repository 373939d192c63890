fn main() {
    std::process::exit(occlp::cli::run(std::env::args_os()));
}
