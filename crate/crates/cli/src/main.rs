fn main() {
    std::process::exit(feedback_phase_cli::run(std::env::args_os()));
}
