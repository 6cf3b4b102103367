use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = eigenoverlap_cli::Cli::parse();
    if let Err(e) = eigenoverlap_cli::run(cli) {
        eprintln!("eigenoverlap: {e}");
        std::process::exit(e.exit_code());
    }
}
