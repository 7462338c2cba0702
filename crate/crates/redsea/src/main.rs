fn main() {
    std::process::exit(redsea::cli::run(std::env::args_os()));
}
