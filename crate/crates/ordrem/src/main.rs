fn main() {
    std::process::exit(ordrem::cli::run());
}
