fn main() {
    std::process::exit(defect_bandit::cli::run(std::env::args_os()));
}
