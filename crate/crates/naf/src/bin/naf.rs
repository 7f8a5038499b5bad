fn main() {
    std::process::exit(naf::cli::run());
}
