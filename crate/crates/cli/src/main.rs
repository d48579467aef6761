use std::io;
use std::process::ExitCode;

use stackelberg_cli::{run_cli, Registry};

fn main() -> ExitCode {
    let code = run_cli(
        std::env::args_os(),
        &Registry::builtin(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    ExitCode::from(code as u8)
}
