fn main() {
    std::process::exit(tr_afem::cli::main_with_args(std::env::args_os()));
}
