fn main() {
    std::process::exit(rtcouple_cli::run(std::env::args_os()));
}
