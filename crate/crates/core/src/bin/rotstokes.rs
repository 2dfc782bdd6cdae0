fn main() {
    std::process::exit(rotstokes::cli::run(std::env::args_os()));
}
