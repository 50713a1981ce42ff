use clap::Parser;

use dlpp_lab::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
        }
        Err(e) => {
            println!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
