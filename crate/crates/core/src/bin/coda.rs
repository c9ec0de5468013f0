use clap::Parser;
use logratio::cli::{init_logging, run, RunConfig};

fn main() {
    init_logging();
    let config = RunConfig::parse();
    std::process::exit(run(&config));
}
