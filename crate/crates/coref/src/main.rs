fn main() {
    std::process::exit(coref::cli::run());
}
