fn main() {
    std::process::exit(mprisk::cli::run(std::env::args_os()));
}
