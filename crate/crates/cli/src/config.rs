//! Scenario config files.
//!
//! A config is a TOML document with a single `[scenario]` table of flat
//! keys. Expression keys take strings (`r = "2 + 4*cos(pi*t)"`); numeric
//! keys take numbers or constant-expression strings (`k = "1/6 + 1e-9"`).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use burgerlab_core::{
    parse, ControllerVariant, Expr, PlantCoupling, Scenario, ScenarioError, ScenarioMode,
};
use toml::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("key `{key}`: {reason}")]
    Key { key: String, reason: String },
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// A loaded config: the validated scenario plus output settings.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    /// `out_dir`, resolved against the config file's directory.
    pub out_dir: Option<PathBuf>,
}

const REQUIRED: [&str; 10] = [
    "nu", "k", "variant", "a", "u_d", "r", "u0", "n", "dt", "t_end",
];
const OPTIONAL: [&str; 13] = [
    "name",
    "mode",
    "exact_uhat",
    "sample_stride",
    "snapshots",
    "out_dir",
    "plant",
    "tol_bound_slack",
    "tol_mean_u",
    "tol_superposition",
    "tol_energy_step",
    "tol_energy_envelope",
    "tol_exact",
];

struct Keys<'a> {
    table: &'a toml::Table,
}

impl<'a> Keys<'a> {
    fn raw(&self, key: &'static str) -> Result<&'a Value, ConfigError> {
        self.table.get(key).ok_or(ConfigError::Missing(key))
    }

    fn text(&self, key: &'static str) -> Result<Option<&'a str>, ConfigError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(bad(key, format!("expected a string, got {}", v.type_str()))),
        }
    }

    fn expr(&self, key: &'static str) -> Result<Option<Expr>, ConfigError> {
        let src = match self.table.get(key) {
            None => return Ok(None),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Integer(i)) => i.to_string(),
            Some(Value::Float(f)) => format!("{f:?}"),
            Some(v) => {
                return Err(bad(
                    key,
                    format!("expected an expression, got {}", v.type_str()),
                ))
            }
        };
        parse(&src)
            .map(Some)
            .map_err(|e| bad(key, format!("{e} in \"{src}\"")))
    }

    fn required_expr(&self, key: &'static str) -> Result<Expr, ConfigError> {
        self.expr(key)?.ok_or(ConfigError::Missing(key))
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.expr(key)? else {
            return Ok(None);
        };
        if !e.is_constant() {
            return Err(bad(key, "must be a constant (no x or t)"));
        }
        e.eval_const()
            .map(Some)
            .map_err(|err| bad(key, err.to_string()))
    }

    fn required_number(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.number(key)?.ok_or(ConfigError::Missing(key))
    }

    fn count(&self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(v) => Err(bad(
                key,
                format!("expected a non-negative integer, got {v}"),
            )),
        }
    }

    fn times(&self, key: &'static str) -> Result<Vec<f64>, ConfigError> {
        match self.table.get(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) => Ok(*i as f64),
                    Value::Float(f) => Ok(*f),
                    other => Err(bad(key, format!("expected numbers, got {other}"))),
                })
                .collect(),
            Some(v) => Err(bad(
                key,
                format!("expected an array of times, got {}", v.type_str()),
            )),
        }
    }
}

/// Parses config text. `base` resolves a relative `out_dir`; `default_name`
/// names the scenario when `name` is absent.
pub fn parse_config(text: &str, base: &Path, default_name: &str) -> Result<Config, ConfigError> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string().replace('\n', " ")))?;
    for key in doc.keys() {
        if key != "scenario" {
            return Err(ConfigError::Syntax(format!(
                "unexpected top-level entry `{key}` (keys belong in a [scenario] table)"
            )));
        }
    }
    let table = match doc.get("scenario") {
        Some(Value::Table(t)) => t,
        _ => return Err(ConfigError::Syntax("missing [scenario] table".into())),
    };
    let known: BTreeSet<&str> = REQUIRED.iter().chain(OPTIONAL.iter()).copied().collect();
    if let Some(k) = table.keys().find(|k| !known.contains(k.as_str())) {
        return Err(ConfigError::Unknown(k.clone()));
    }
    let keys = Keys { table };

    let mut s = Scenario::zero();
    s.name = keys.text("name")?.unwrap_or(default_name).to_string();
    s.nu = keys.required_number("nu")?;
    s.k = keys.required_number("k")?;
    s.variant = match keys.raw("variant")? {
        Value::String(v) => v
            .parse::<ControllerVariant>()
            .map_err(|e| bad("variant", e))?,
        v => {
            return Err(bad(
                "variant",
                format!("expected a string, got {}", v.type_str()),
            ))
        }
    };
    s.mode = match keys.text("mode")? {
        None | Some("closed_loop") => ScenarioMode::ClosedLoop,
        Some("heat") => ScenarioMode::Heat,
        Some(m) => {
            return Err(bad(
                "mode",
                format!("unknown mode `{m}` (expected `closed_loop` or `heat`)"),
            ))
        }
    };
    s.plant_coupling = match keys.text("plant")? {
        None | Some("anchored") => PlantCoupling::Anchored,
        Some("free") => PlantCoupling::FreeRunning,
        Some(p) => {
            return Err(bad(
                "plant",
                format!("unknown coupling `{p}` (expected `anchored` or `free`)"),
            ))
        }
    };
    s.a = keys.required_expr("a")?;
    s.ud = keys.required_expr("u_d")?;
    s.r = keys.required_expr("r")?;
    s.u0 = keys.required_expr("u0")?;
    s.exact_uhat = keys.expr("exact_uhat")?;
    s.n = keys.count("n")?.ok_or(ConfigError::Missing("n"))?;
    s.dt = keys.required_number("dt")?;
    s.t_end = keys.required_number("t_end")?;
    if let Some(stride) = keys.count("sample_stride")? {
        s.sample_stride = stride;
    }
    s.snapshot_times = keys.times("snapshots")?;
    let tol = &mut s.tolerances;
    for (key, slot) in [
        ("tol_bound_slack", &mut tol.bound_slack),
        ("tol_mean_u", &mut tol.mean_u),
        ("tol_superposition", &mut tol.superposition),
        ("tol_energy_step", &mut tol.energy_step),
        ("tol_energy_envelope", &mut tol.energy_envelope),
        ("tol_exact", &mut tol.exact),
    ] {
        if let Some(v) = keys.number(key)? {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(key, format!("must be non-negative (got {v})")));
            }
            *slot = v;
        }
    }
    s.validate()?;
    let out_dir = keys.text("out_dir")?.map(|d| base.join(d));
    Ok(Config {
        scenario: s,
        out_dir,
    })
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse_config(&text, base, name)
}

/// Reads a config file and returns its fully validated scenario.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    load_config(path).map(|c| c.scenario)
}
