use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let verbosity = args.iter().filter(|a| a.to_str().is_some_and(|s| s == "-v" || s == "--verbose")).count();
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let code = blazemap::cli::run(args, &mut std::io::stdout().lock());
    ExitCode::from(code as u8)
}
