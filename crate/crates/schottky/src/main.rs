fn main() {
    std::process::exit(schottky::cli::run(std::env::args_os()));
}
