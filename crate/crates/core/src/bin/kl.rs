use clap::Parser;

fn main() {
    std::process::exit(kl_core::cli::run(kl_core::cli::Cli::parse()));
}
