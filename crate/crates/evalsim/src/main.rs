use clap::Parser;
use evalsim::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("evalsim: {e}");
        std::process::exit(e.exit_code());
    }
}
