fn main() {
    std::process::exit(hj_minmax::cli::main_with(std::env::args_os()));
}
