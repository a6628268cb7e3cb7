use clap::Parser;

fn main() {
    std::process::exit(udbgl::cli::execute(udbgl::cli::Cli::parse()));
}
