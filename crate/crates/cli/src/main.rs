use clap::Parser;

fn main() {
    let cli = kineq_cli::Cli::parse();
    std::process::exit(kineq_cli::execute(&cli));
}
