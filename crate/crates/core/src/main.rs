fn main() {
    std::process::exit(convopd::cli::run(std::env::args_os()));
}
