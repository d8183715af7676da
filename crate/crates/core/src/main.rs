fn main() {
    std::process::exit(spiband::cli::run(std::env::args_os()));
}
