use std::process::ExitCode;

fn main() -> ExitCode {
    let result = heatcalc_cli::parse_config(std::env::args_os()).and_then(|cfg| heatcalc_cli::run(&cfg));
    match result {
        Ok(written) => {
            println!("wrote {} and {}", written.csv.display(), written.json.display());
            ExitCode::SUCCESS
        }
        Err(heatcalc_cli::CliError::Info(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
