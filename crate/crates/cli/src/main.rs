use std::process::ExitCode;

fn main() -> ExitCode {
    poisson_couple_cli::run()
}
