fn main() -> std::process::ExitCode {
    eeg_fewshot::cli::run(std::env::args_os())
}
