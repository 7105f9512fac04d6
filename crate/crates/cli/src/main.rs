use std::process::ExitCode;

fn main() -> anyhow::Result<ExitCode> {
    let outcome = cpc_cli::run_args(std::env::args_os());
    cpc_cli::emit(&outcome);
    Ok(ExitCode::from(outcome.code))
}
