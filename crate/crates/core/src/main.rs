use clap::Parser;

fn main() {
    let cli = qsusc::cli::Cli::parse();
    std::process::exit(qsusc::cli::run(cli));
}
