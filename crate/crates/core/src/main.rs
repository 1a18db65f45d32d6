use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    match sde_trunc::cli::run(std::env::args_os(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg = format!("{err:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
