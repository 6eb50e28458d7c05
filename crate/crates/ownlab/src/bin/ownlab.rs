fn main() {
    std::process::exit(ownlab::cli::main_with_args(std::env::args()));
}
