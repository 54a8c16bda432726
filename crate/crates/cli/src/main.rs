//! Binary entry point: parse, dispatch, print, map errors to exit codes.

use clap::Parser;

fn main() {
    let cli = stakemech_cli::Cli::parse();
    match stakemech_cli::dispatch(cli) {
        Ok(out) => print!("{}", out.stdout),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
