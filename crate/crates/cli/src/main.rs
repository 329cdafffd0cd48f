fn main() {
    std::process::exit(causal_harness_cli::run(std::env::args_os()));
}
