use clap::Parser;

fn main() {
    let cli = mivs::cli::Cli::parse();
    if let Err(e) = mivs::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
