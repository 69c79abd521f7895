fn main() {
    std::process::exit(llp::cli::main_with_args(std::env::args_os()));
}
