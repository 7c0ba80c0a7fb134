fn main() {
    std::process::exit(smellprobe::cli::run(std::env::args_os()));
}
