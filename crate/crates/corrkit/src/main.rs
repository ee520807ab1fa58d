fn main() {
    std::process::exit(corrkit::cli::run());
}
