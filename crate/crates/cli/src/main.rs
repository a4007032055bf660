use clap::Parser;

fn main() {
    let cli = manivet_cli::Cli::parse();
    std::process::exit(manivet_cli::run(&cli));
}
