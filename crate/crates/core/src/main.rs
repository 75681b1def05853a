fn main() {
    std::process::exit(counterspec::cli::main_with_args(std::env::args_os()));
}
