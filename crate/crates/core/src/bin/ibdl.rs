fn main() {
    std::process::exit(ibdl::cli::run_cli(std::env::args_os()));
}
