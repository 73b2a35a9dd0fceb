use std::process::ExitCode;

fn main() -> ExitCode {
    scfp::cli::main()
}
