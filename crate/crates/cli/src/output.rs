//! Output plumbing: atomic file writes, measure formatting, label
//! sanitizing.

use std::io::Write;
use std::path::Path;

use rqa_core::RqaMeasures;

use crate::CliError;

/// Write via a temp file in the destination directory plus rename, so a
/// crash never leaves a truncated output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| CliError::Data(format!("{}: cannot create temp file: {e}", path.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::Data(format!("{}: write failed: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("{}: rename failed: {e}", path.display())))?;
    Ok(())
}

/// `NA` for undefined measure components.
pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".to_string(),
    }
}

/// One measures row in the shared column order
/// `rr,det,lam,div,lmax`.
pub fn measures_cells(m: &RqaMeasures) -> String {
    format!(
        "{},{},{},{},{}",
        m.rr,
        fmt_opt(m.det),
        fmt_opt(m.lam),
        fmt_opt(m.div),
        m.lmax
    )
}

/// Group labels become file-name fragments; anything outside
/// `[A-Za-z0-9_-]` is replaced.
pub fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
