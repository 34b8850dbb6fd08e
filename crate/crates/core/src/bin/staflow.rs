fn main() {
    std::process::exit(staflow::cli::run(std::env::args_os()));
}
