use clap::Parser;

fn main() {
    let args = certirate::harness::cli::CliArgs::parse();
    std::process::exit(certirate::harness::cli::run_cli(args));
}
