fn main() {
    std::process::exit(opmlab::cli::run(std::env::args_os()));
}
