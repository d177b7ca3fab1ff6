fn main() {
    std::process::exit(ergokit_lab::cli::run(std::env::args_os()));
}
