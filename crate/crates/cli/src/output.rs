//! CSV emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use burgerlab_core::{Grid, RunRecord};

pub const CSV_HEADER: &str = "t,u_a,r,e,bound,norm_uhat,meanU_residual,superpos_residual";

/// `printf("%.12g")`: 12 significant digits, trailing zeros dropped,
/// exponent form below 1e-4 or from 1e12.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV body for a record: header, one row per sample, then a comment line
/// with the termination status and `λ`.
pub fn render_csv(record: &RunRecord) -> String {
    let mut out = String::with_capacity(64 * (record.samples.len() + 2));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &record.samples {
        let cols = [
            s.t,
            s.u_a,
            s.r,
            s.e,
            s.bound,
            s.norm_uhat,
            s.mean_u_residual,
            s.superposition_residual,
        ];
        let row: Vec<String> = cols.iter().map(|&v| format_g12(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let lambda = record.lambda.map_or("none".to_string(), format_g12);
    let status = record.status.to_string().replace(['\n', '\r'], " ");
    let _ = writeln!(out, "# status={status} lambda={lambda}");
    out
}

/// Field snapshots as CSV: `t,x,uhat,U,u`.
pub fn render_snapshots(record: &RunRecord) -> Option<String> {
    if record.snapshots.is_empty() {
        return None;
    }
    let grid = Grid::new(record.n).ok()?;
    let mut out = String::from("t,x,uhat,U,u\n");
    for snap in &record.snapshots {
        for i in 0..grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_g12(snap.t),
                format_g12(grid.x(i)),
                format_g12(snap.uhat[i]),
                format_g12(snap.regulator[i]),
                format_g12(snap.plant[i])
            );
        }
    }
    Some(out)
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the record CSV to `path`.
pub fn emit_csv(record: &RunRecord, path: &Path) -> std::io::Result<()> {
    write_atomic(path, &render_csv(record))
}

/// Writes `<name>.csv` and, when snapshots exist, `<name>_snapshots.csv`
/// into `dir`. Returns the paths written.
pub fn emit_run(record: &RunRecord, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let main = dir.join(format!("{}.csv", record.scenario));
    emit_csv(record, &main)?;
    let mut written = vec![main];
    if let Some(body) = render_snapshots(record) {
        let snap = dir.join(format!("{}_snapshots.csv", record.scenario));
        write_atomic(&snap, &body)?;
        written.push(snap);
    }
    Ok(written)
}
