fn main() {
    std::process::exit(ctxkit::cli::run(std::env::args_os()));
}
