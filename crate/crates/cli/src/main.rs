fn main() {
    std::process::exit(embfuse::run());
}
