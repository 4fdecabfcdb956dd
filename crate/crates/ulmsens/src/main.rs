fn main() {
    std::process::exit(ulmsens::cli::main_with_args(std::env::args_os()));
}
