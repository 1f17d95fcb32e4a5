fn main() {
    std::process::exit(gainloss::cli::run_from(std::env::args_os()));
}
