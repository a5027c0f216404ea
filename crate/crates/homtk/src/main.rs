fn main() {
    std::process::exit(homtk::cli::run(std::env::args_os()));
}
