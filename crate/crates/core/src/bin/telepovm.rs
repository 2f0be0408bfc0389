use std::io;
use std::process::ExitCode;

use telepovm::harness::cli::cli_main;

fn main() -> ExitCode {
    let code = cli_main(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
