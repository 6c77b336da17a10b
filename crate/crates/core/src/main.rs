fn main() {
    std::process::exit(polycom::cli::run(std::env::args_os()));
}
