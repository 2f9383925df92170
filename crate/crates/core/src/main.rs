use clap::Parser;

fn main() {
    let cli = fbflow::cli::Cli::parse();
    std::process::exit(fbflow::cli::run(cli));
}
