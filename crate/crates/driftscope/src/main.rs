fn main() {
    std::process::exit(driftscope::cli::run(std::env::args_os()));
}
