use clap::Parser;

use wellposed::cli::{dispatch, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    match dispatch(&cfg) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
