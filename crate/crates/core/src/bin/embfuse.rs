fn main() {
    std::process::exit(embfuse::cli::dispatch());
}
