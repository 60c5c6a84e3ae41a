fn main() {
    std::process::exit(bandaware_core::cli::run(std::env::args_os()));
}
