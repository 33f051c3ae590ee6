fn main() {
    std::process::exit(semid::cli::run(std::env::args_os()));
}
