use clap::Parser;

fn main() {
    let cli = prcis_cli::Cli::parse();
    if let Err(e) = prcis_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
