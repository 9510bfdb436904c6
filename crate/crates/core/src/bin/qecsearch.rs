fn main() {
    std::process::exit(qecsearch::cli::run(std::env::args_os()));
}
