fn main() {
    std::process::exit(ultracoarse::cli::run(std::env::args_os()));
}
