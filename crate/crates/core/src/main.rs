use clap::Parser;

fn main() {
    std::process::exit(tonetrim::cli::run(tonetrim::cli::Cli::parse()));
}
