fn main() {
    std::process::exit(kicked_ratchet::cli::run(std::env::args_os()));
}
