use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Writes `body` to `out` through a temporary file in the same directory,
/// renamed into place once complete. Standard output when `out` is `None`.
pub fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(body.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            });
    };
    let fail = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(body.as_bytes()).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Fixed scientific notation with ten significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.9e}")
}

/// CSV document: one provenance header line, a column line, then rows.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &str, columns: &str) -> Self {
        Table {
            text: format!("# {header}\n{columns}\n"),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
