fn main() {
    std::process::exit(glauber_lab::cli::run(std::env::args_os()));
}
