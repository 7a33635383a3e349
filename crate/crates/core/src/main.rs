use std::process::ExitCode;

fn main() -> ExitCode {
    critvis::cli::run()
}
