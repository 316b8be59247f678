fn main() {
    std::process::exit(finsler_flow::cli::run(std::env::args_os()));
}
