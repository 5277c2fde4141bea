fn main() {
    std::process::exit(netcover::cli::run(std::env::args_os()));
}
