fn main() {
    std::process::exit(convdiff::cli::run(std::env::args_os()));
}
