use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use sbomvert::cli::{
    cmd_convert, cmd_diff, cmd_eval, cmd_generate, cmd_scan, Cli, CliError, Command, ScanConfig,
};

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))
}

fn read_stdin() -> Result<String, CliError> {
    let mut buf = String::new();
    std::io::stdin()
        .read_to_string(&mut buf)
        .map_err(|e| CliError::Input(format!("reading stdin: {e}")))?;
    Ok(buf)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))
}

fn emit(output: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { db, distro, output } => {
            let sbom = cmd_generate(&read_file(&db)?, &distro)?;
            emit(output.as_ref(), &sbom)
        }
        Command::Convert { input, output, target } => {
            let text = match &input {
                Some(path) => read_file(path)?,
                None => read_stdin()?,
            };
            let result = cmd_convert(&text, &target)?;
            match &output {
                Some(path) => {
                    write_file(path, &result.sbom)?;
                    let mut sidecar = path.as_os_str().to_owned();
                    sidecar.push(".warnings.json");
                    write_file(Path::new(&sidecar), &result.warnings)
                }
                None => {
                    print!("{}", result.sbom);
                    eprint!("{}", result.warnings);
                    Ok(())
                }
            }
        }
        Command::Scan {
            input,
            tracker,
            output,
            per_source,
            exclude_kernel,
            cutoff_year,
            include_unimportant,
            format,
        } => {
            let config = ScanConfig {
                per_source,
                exclude_kernel,
                cutoff_year,
                include_unimportant,
                format,
            };
            let report = cmd_scan(&read_file(&input)?, &read_file(&tracker)?, &config)?;
            emit(output.as_ref(), &report)
        }
        Command::Diff { a, b, raw } => {
            let out = cmd_diff(&read_file(&a)?, &read_file(&b)?, raw)?;
            print!("{out}");
            Ok(())
        }
        Command::Eval { report, truth, format } => {
            let out = cmd_eval(&read_file(&report)?, &read_file(&truth)?, format)?;
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
