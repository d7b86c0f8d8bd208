fn main() {
    std::process::exit(litgrowth::cli::run(std::env::args_os()));
}
