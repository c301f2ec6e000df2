fn main() {
    std::process::exit(thinspec::cli::run(std::env::args_os()));
}
