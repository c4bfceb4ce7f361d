use clap::Parser;
use xmodal::cli::{dispatch, Cli};

fn main() {
    let mut builder = env_logger::Builder::new();
    builder.format_timestamp(None);
    match std::env::var(xmodal::LOG_ENV) {
        Ok(spec) => {
            builder.parse_filters(&spec).init();
        }
        Err(_) => {
            // Let a config's `[run] log` raise or lower the level later.
            builder.filter_level(log::LevelFilter::Trace).init();
            log::set_max_level(log::LevelFilter::Info);
        }
    }
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.kind.exit_code());
    }
}
