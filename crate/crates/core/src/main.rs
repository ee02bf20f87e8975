use clap::Parser;
use layertomo::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(_) => {}
        Err(err) => {
            eprintln!(
                "error code={} kind={} message={}",
                err.exit_code(),
                err.kind(),
                err
            );
            std::process::exit(err.exit_code());
        }
    }
}
