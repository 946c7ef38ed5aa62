use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qcbm::harness::cli(std::env::args_os()).clamp(0, 255) as u8)
}
