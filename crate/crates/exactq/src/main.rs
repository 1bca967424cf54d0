use clap::Parser;

fn main() {
    let cli = exactq::cli::Cli::parse();
    std::process::exit(exactq::cli::run(cli));
}
