fn main() {
    std::process::exit(heatsing::cli::run(std::env::args_os()));
}
