use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let threads = std::env::var("MOBISIM_THREADS").ok();
    if let Err(e) = mobisim_cli::configure_threads(threads.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(e.code as u8);
    }
    let outcome = mobisim_cli::run(std::env::args_os());
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
