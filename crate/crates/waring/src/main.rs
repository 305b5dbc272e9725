use clap::Parser;

fn main() {
    let args = waring::cli::CliArgs::parse();
    std::process::exit(waring::cli::run_cli(args));
}
