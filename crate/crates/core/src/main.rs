fn main() {
    std::process::exit(sleepwatch::cli::run(std::env::args_os()));
}
