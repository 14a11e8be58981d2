use clap::Parser;

use spfl_core::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let status = execute(&cli, &mut std::io::stderr());
    std::process::exit(status);
}
