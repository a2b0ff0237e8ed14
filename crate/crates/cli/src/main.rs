fn main() {
    std::process::exit(rng_audit_cli::run_cli(std::env::args_os()));
}
