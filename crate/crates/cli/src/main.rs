use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROMCLOSE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = romclose_cli::Cli::parse();
    if let Err(err) = romclose_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
