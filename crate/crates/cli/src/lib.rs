//! Command-line front end for `burgerlab_core`: scenario config files, CSV
//! output and the `simulate`, `verify` and `converge` commands.

pub mod app;
pub mod config;
pub mod output;

pub use app::{run, EXIT_INVARIANT, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
pub use config::{load_config, load_scenario, parse_config, Config, ConfigError};
pub use output::{emit_csv, emit_run, format_g12, render_csv, CSV_HEADER};
