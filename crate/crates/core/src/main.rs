use clap::Parser;

fn main() {
    let cli = dqtrack::cli::Cli::parse();
    let code = dqtrack::cli::run(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
