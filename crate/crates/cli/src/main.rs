use clap::Parser;

fn main() {
    std::process::exit(ngnbill_cli::run(ngnbill_cli::Cli::parse()));
}
