use dapotion_cli::{parse_args, run, ParseError};

fn main() {
    let config = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(ParseError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match run(&config) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
