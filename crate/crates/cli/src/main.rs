use clap::Parser;

fn main() {
    let cli = otl_cli::cli::Cli::parse();
    if let Err(e) = otl_cli::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
