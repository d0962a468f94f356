fn main() {
    std::process::exit(dfakit_cli::run_cli(std::env::args_os()));
}
