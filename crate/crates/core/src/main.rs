fn main() -> std::process::ExitCode {
    homega::cli::main_with_args(std::env::args_os())
}
