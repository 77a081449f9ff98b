fn main() {
    std::process::exit(fairdex::cli::main_with_args(std::env::args_os()));
}
