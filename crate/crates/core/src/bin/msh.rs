fn main() {
    std::process::exit(midstream_hash::cli::run(std::env::args_os()));
}
