fn main() {
    std::process::exit(ldp_tails_cli::run(std::env::args_os()));
}
