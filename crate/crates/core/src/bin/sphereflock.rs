fn main() {
    std::process::exit(sphereflock::cli::run_cli(std::env::args_os()));
}
