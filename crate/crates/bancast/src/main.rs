fn main() {
    std::process::exit(bancast::cli::main_with_args(std::env::args()));
}
