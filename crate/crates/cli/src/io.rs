use std::io::{self, BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::CliError;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("cannot write {}: {e}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| io_error(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when it is `None`.
pub fn write_output<F>(path: Option<&str>, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match path {
        Some(p) => write_atomic(Path::new(p), fill),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush().map_err(|e| CliError::data(format!("cannot write stdout: {e}")))
        }
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| io_error(path, e))?;
        writeln!(w).map_err(|e| io_error(path, e))
    })
}

/// CSV writer over any sink, with errors mapped to [`CliError`].
pub struct Table<'a> {
    inner: csv::Writer<&'a mut dyn Write>,
}

impl<'a> Table<'a> {
    pub fn new(w: &'a mut dyn Write, header: &[&str]) -> Result<Self, CliError> {
        let mut t = Self { inner: csv::Writer::from_writer(w) };
        t.row(header)?;
        Ok(t)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| CliError::data(format!("cannot write CSV: {e}")))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| CliError::data(format!("cannot write CSV: {e}")))
    }
}
