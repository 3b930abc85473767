fn main() {
    std::process::exit(shellhomog::cli::run_from_args());
}
