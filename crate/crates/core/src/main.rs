fn main() {
    std::process::exit(netosc::cli::run(std::env::args_os()));
}
