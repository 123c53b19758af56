fn main() {
    std::process::exit(mjds::cli::main_with_args(std::env::args_os()));
}
