fn main() {
    std::process::exit(fibermap::cli::run(std::env::args_os()));
}
