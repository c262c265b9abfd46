//! Command dispatch. Kept out of `main` so it runs in-process under test.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use burgerlab_core::{check_invariants, convergence_study, run_closed_loop, DtRule, StudyError};
use clap::{Parser, Subcommand};

use crate::config::load_config;
use crate::output::emit_run;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Closed-loop tracking control of the viscous Burgers equation.
#[derive(Debug, Parser)]
#[command(name = "burgerlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its time series as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir`; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and check every invariant; exit 1 on any failure.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run on a 2x refinement sequence and print observed orders.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated node counts, coarse to fine.
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        /// Step per level: `fixed`, `dx/5`, `dx*c`, `dx^2*c` or `dx^2/d`.
        #[arg(long, default_value = "dx/5")]
        dt_rule: DtRule,
    },
}

/// A failed command: exit code plus a one-line message.
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

fn fail(code: i32, kind: &'static str, message: impl ToString) -> Failure {
    Failure {
        code,
        kind,
        message: message.to_string().replace('\n', " "),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.render().to_string();
            let mut lines = text.lines();
            let first = lines.next().unwrap_or("invalid usage");
            let _ = writeln!(err, "error[usage]: {}", first.trim_start_matches("error: "));
            for l in lines {
                let _ = writeln!(err, "{l}");
            }
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Simulate { config, out: dir } => simulate(&config, dir, out),
        Command::Verify { config } => verify(&config, out),
        Command::Converge {
            config,
            grids,
            dt_rule,
        } => converge(&config, &grids, dt_rule, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.kind, f.message);
            f.code
        }
    }
}

fn load(path: &std::path::Path) -> Result<crate::config::Config, Failure> {
    load_config(path).map_err(|e| fail(EXIT_USAGE, "config", format!("{}: {e}", path.display())))
}

fn simulate(
    path: &std::path::Path,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = load(path)?;
    let record = run_closed_loop(&cfg.scenario).map_err(|e| fail(EXIT_USAGE, "config", e))?;
    let dir = dir.or(cfg.out_dir).unwrap_or_else(|| PathBuf::from("out"));
    let written = emit_run(&record, &dir)
        .map_err(|e| fail(EXIT_RUNTIME, "io", format!("{}: {e}", dir.display())))?;
    let max_e = record
        .max_abs_error_after(2.0)
        .map_or("none".to_string(), |v| format!("{v:.6e}"));
    let lambda = record.lambda.map_or("none".to_string(), |l| l.to_string());
    let _ = writeln!(
        out,
        "{}: status={} lambda={} samples={} max_abs_e_after_t2={} csv={}",
        record.scenario,
        record.status,
        lambda,
        record.samples.len(),
        max_e,
        written[0].display()
    );
    if !record.status.is_completed() {
        return Err(fail(EXIT_RUNTIME, "runtime", &record.status));
    }
    Ok(())
}

fn verify(path: &std::path::Path, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = load(path)?;
    let record = run_closed_loop(&cfg.scenario).map_err(|e| fail(EXIT_USAGE, "config", e))?;
    let report = check_invariants(&record, &cfg.scenario.tolerances);
    let _ = write!(out, "{report}");
    if !record.status.is_completed() {
        return Err(fail(EXIT_RUNTIME, "runtime", &record.status));
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(fail(
            EXIT_INVARIANT,
            "invariant",
            format!("failed checks: {}", failed.join(",")),
        ));
    }
    let _ = writeln!(out, "{}: all checks passed", record.scenario);
    Ok(())
}

fn converge(
    path: &std::path::Path,
    grids: &[usize],
    rule: DtRule,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = load(path)?;
    let report = convergence_study(&cfg.scenario, grids, rule).map_err(|e| match e {
        StudyError::LevelFailed { .. } => fail(EXIT_RUNTIME, "runtime", e),
        _ => fail(EXIT_USAGE, "usage", e),
    })?;
    let _ = write!(out, "{report}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("burgerlab").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2_with_prefix() {
        for args in [
            &[][..],
            &["simulate"],
            &["bogus"],
            &["converge", "--config", "x", "--grids", "a"],
        ] {
            let (code, _, err) = call(args);
            assert_eq!(code, EXIT_USAGE, "{args:?}");
            assert!(err.starts_with("error[usage]: "), "{err}");
        }
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn missing_config_is_config_error() {
        let (code, _, err) = call(&["verify", "--config", "/nonexistent/x.cfg"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.starts_with("error[config]: "), "{err}");
        assert_eq!(err.lines().count(), 1);
    }
}
