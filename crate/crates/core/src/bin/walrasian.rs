fn main() {
    std::process::exit(walrasian::cli::main_with_args(std::env::args_os()));
}
